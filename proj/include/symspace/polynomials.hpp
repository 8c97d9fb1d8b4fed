#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "symspace/numerics.hpp"

namespace symspace {

/// Sparse real polynomial in several variables. A monomial is the sorted
/// list of its variable indices (with repetition), so y0*y2^2 is {0,2,2}.
class SparsePoly {
 public:
  using Monomial = std::vector<int>;

  SparsePoly() = default;

  static SparsePoly constant(double c) {
    SparsePoly p;
    if (c != 0.0) p.terms_[{}] = c;
    return p;
  }

  void add_term(Monomial mono, double coeff) {
    std::sort(mono.begin(), mono.end());
    terms_[mono] += coeff;
  }

  double constant_term() const {
    auto it = terms_.find({});
    return it == terms_.end() ? 0.0 : it->second;
  }

  double eval(const Vec& y) const {
    double acc = 0.0;
    for (const auto& [mono, c] : terms_) {
      double t = c;
      for (int v : mono) t *= y[v];
      acc += t;
    }
    return acc;
  }

  SparsePoly partial(int var) const {
    SparsePoly out;
    for (const auto& [mono, c] : terms_) {
      int count = static_cast<int>(std::count(mono.begin(), mono.end(), var));
      if (count == 0) continue;
      Monomial reduced;
      bool removed = false;
      for (int v : mono) {
        if (v == var && !removed) {
          removed = true;
          continue;
        }
        reduced.push_back(v);
      }
      out.add_term(reduced, c * count);
    }
    out.prune(0.0);
    return out;
  }

  bool contains_var(int var) const {
    for (const auto& [mono, c] : terms_) {
      (void)c;
      if (std::find(mono.begin(), mono.end(), var) != mono.end()) return true;
    }
    return false;
  }

  bool is_zero() const { return terms_.empty(); }

  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [mono, c] : terms_) {
      (void)mono;
      m = std::max(m, std::abs(c));
    }
    return m;
  }

  /// Drop terms with |coeff| <= tol.
  void prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(it->second) <= tol)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  const std::map<Monomial, double>& terms() const { return terms_; }

 private:
  std::map<Monomial, double> terms_;
};

}  // namespace symspace
