#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace symspace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Neumaier compensated accumulator; deterministic for a fixed add order.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// One-dimensional Gauss-Legendre rule on [-1, 1].
struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Nodes by Newton iteration on P_n; cached per order.
inline const QuadRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  QuadRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(M_PI * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // evaluate P_n and P_n' by the three-term recurrence
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.x[k] = -x;            // ascending order
    rule.w[k] = w;
    rule.x[n - 1 - k] = x;
    rule.w[n - 1 - k] = w;
  }
  if (n % 2 == 1) rule.x[n / 2] = 0.0;
  auto [ins, ok] = cache.emplace(n, std::move(rule));
  (void)ok;
  return ins->second;
}

/// Composite Gauss-Legendre integral of f over [a, b] with `panels` panels.
inline double integrate_1d(const std::function<double(double)>& f, double a,
                           double b, int order, int panels = 1) {
  const QuadRule& rule = gauss_legendre(order);
  KahanSum acc;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    double mid = lo + 0.5 * h, half = 0.5 * h;
    for (int i = 0; i < order; ++i)
      acc.add(rule.w[i] * half * f(mid + half * rule.x[i]));
  }
  return acc.value();
}

/// Cubic Hermite interpolant on a uniform mesh; values and first derivatives
/// are stored per node, error O(h^4) for smooth data.
class HermiteTable {
 public:
  HermiteTable() = default;
  HermiteTable(double x0, double h, std::vector<double> v, std::vector<double> d)
      : x0_(x0), h_(h), v_(std::move(v)), d_(std::move(d)) {}

  double x_min() const { return x0_; }
  double x_max() const { return x0_ + h_ * (static_cast<double>(v_.size()) - 1); }

  double value(double x) const {
    auto [i, u] = locate(x);
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    return h00 * v_[i] + h10 * h_ * d_[i] + h01 * v_[i + 1] + h11 * h_ * d_[i + 1];
  }

  double derivative(double x) const {
    auto [i, u] = locate(x);
    double g00 = 6 * u * (u - 1);
    double g10 = (1 - u) * (1 - 3 * u);
    double g01 = -6 * u * (u - 1);
    double g11 = u * (3 * u - 2);
    return (g00 * v_[i] + g01 * v_[i + 1]) / h_ + g10 * d_[i] + g11 * d_[i + 1];
  }

 private:
  std::pair<int, double> locate(double x) const {
    double s = (x - x0_) / h_;
    int i = static_cast<int>(std::floor(s));
    int last = static_cast<int>(v_.size()) - 2;
    if (i < 0) i = 0;
    if (i > last) i = last;
    return {i, s - i};
  }
  double x0_ = 0.0, h_ = 1.0;
  std::vector<double> v_, d_;
};

/// FNV-1a, used only to fingerprint row inputs in reports.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex_digest(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(s)));
  return std::string(buf);
}

/// Deterministic RNG with a stream id folded into the seed.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  rng.discard(16);
  return rng;
}

inline double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, result = 0.0;
  for (std::uint64_t i = index; i > 0; i /= base) {
    f /= static_cast<double>(base);
    result += f * static_cast<double>(i % base);
  }
  return result;
}

/// Low-discrepancy points on the unit sphere of R^n: Halton points mapped to
/// Gaussians by Box-Muller pairs, then normalized.
inline Vec sphere_point_lowdisc(std::uint64_t index, int n) {
  static const std::uint64_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                         23, 29, 31, 37, 41, 43, 47, 53};
  Vec v(n);
  int pairs = (n + 1) / 2;
  for (int p = 0; p < pairs; ++p) {
    double u1 = halton(index + 1, primes[(2 * p) % 16]);
    double u2 = halton(index + 1, primes[(2 * p + 1) % 16]);
    u1 = std::min(std::max(u1, 1e-12), 1.0 - 1e-12);
    double r = std::sqrt(-2.0 * std::log(u1));
    double g1 = r * std::cos(2 * M_PI * u2);
    double g2 = r * std::sin(2 * M_PI * u2);
    v[2 * p] = g1;
    if (2 * p + 1 < n) v[2 * p + 1] = g2;
  }
  double nn = v.norm();
  if (nn < 1e-14) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / nn;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace symspace
