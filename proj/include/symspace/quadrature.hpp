#pragma once

#include <functional>

#include "symspace/chart.hpp"
#include "symspace/geometry.hpp"
#include "symspace/numerics.hpp"

namespace symspace {

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;  // dual-order comparison estimate
};

/// How a grid over (t, y) coordinates weighs its nodes.
///   PlainDnDa: the product Haar measure dn da' (Lebesgue in (t, y)).
///   VolumeNA:  dV through the NA parametrization, weight e^{-2 rho(t)}.
///   VolumeAN:  dV through the AN parametrization, weight 1 with the y-block
///              rescaled by e^{alpha_j(t)} before evaluation.
enum class Density { PlainDnDa, VolumeNA, VolumeAN };

/// Tensor-product Gauss-Legendre rule over a box, with a lower-order
/// companion rule for error estimation.
class QuadratureGrid {
 public:
  QuadratureGrid(Mat box, int order = 24, int err_order = 16,
                 Density density = Density::PlainDnDa)
      : box_(std::move(box)), order_(order), err_order_(err_order), density_(density) {
    require(box_.rows() == 2 && box_.cols() >= 1, Errc::ConfigError, "box must be 2 x k");
    for (int k = 0; k < box_.cols(); ++k)
      require(box_(1, k) > box_(0, k), Errc::ConfigError, "box interval is empty");
  }

  int dims() const { return static_cast<int>(box_.cols()); }
  const Mat& box() const { return box_; }
  int order() const { return order_; }
  int err_order() const { return err_order_; }
  Density density() const { return density_; }

  double volume() const {
    double v = 1.0;
    for (int k = 0; k < dims(); ++k) v *= box_(1, k) - box_(0, k);
    return v;
  }

  /// Tensor sum of w * f(x) at the given order (deterministic node order).
  double weighted_sum(int order, const std::function<double(const Vec&)>& f) const {
    const QuadRule& rule = gauss_legendre(order);
    const int k = dims();
    std::vector<int> idx(k, 0);
    Vec x(k), half(k), mid(k);
    for (int d = 0; d < k; ++d) {
      half[d] = 0.5 * (box_(1, d) - box_(0, d));
      mid[d] = 0.5 * (box_(1, d) + box_(0, d));
    }
    KahanSum acc;
    while (true) {
      double w = 1.0;
      for (int d = 0; d < k; ++d) {
        x[d] = mid[d] + half[d] * rule.x[idx[d]];
        w *= half[d] * rule.w[idx[d]];
      }
      acc.add(w * f(x));
      int d = 0;
      while (d < k && ++idx[d] == order) idx[d++] = 0;
      if (d == k) break;
    }
    return acc.value();
  }

  /// Plain integral over the box (unit density).
  IntegrationResult integrate(const std::function<double(const Vec&)>& f) const {
    double v1 = weighted_sum(order_, f);
    double v2 = weighted_sum(err_order_, f);
    return {v1, std::abs(v1 - v2)};
  }

  /// Largest |f| over a lattice on the boundary faces of the box.
  double boundary_max(const std::function<double(const Vec&)>& f,
                      int per_axis = 7) const {
    const int k = dims();
    double worst = 0.0;
    Vec x(k);
    for (int face_dim = 0; face_dim < k; ++face_dim)
      for (int side = 0; side < 2; ++side) {
        std::vector<int> idx(k, 0);
        while (true) {
          for (int d = 0; d < k; ++d) {
            if (d == face_dim) {
              x[d] = box_(side, d);
            } else {
              double u = per_axis == 1 ? 0.5 : static_cast<double>(idx[d]) / (per_axis - 1);
              x[d] = box_(0, d) + u * (box_(1, d) - box_(0, d));
            }
          }
          worst = std::max(worst, std::abs(f(x)));
          int d = 0;
          while (d < k && (d == face_dim || ++idx[d] == per_axis)) {
            if (d != face_dim) idx[d] = 0;
            ++d;
          }
          if (d == k) break;
        }
      }
    return worst;
  }

 private:
  Mat box_;
  int order_;
  int err_order_;
  Density density_;
};

namespace detail {

inline void check_boundary_mass(const QuadratureGrid& grid,
                                const std::function<double(const Vec&)>& f,
                                bool truncation_ok) {
  if (truncation_ok) return;
  double interior = 0.0;
  // coarse interior scale
  const int k = grid.dims();
  Vec x(k);
  std::vector<int> idx(k, 0);
  const int n = 5;
  while (true) {
    for (int d = 0; d < k; ++d) {
      double u = (idx[d] + 0.5) / n;
      x[d] = grid.box()(0, d) + u * (grid.box()(1, d) - grid.box()(0, d));
    }
    interior = std::max(interior, std::abs(f(x)));
    int d = 0;
    while (d < k && ++idx[d] == n) idx[d++] = 0;
    if (d == k) break;
  }
  double edge = grid.boundary_max(f);
  require(edge <= 1e-12 * std::max(1.0, interior), Errc::BoundaryMass,
          "support leaks outside the quadrature box");
}

/// exp of a small matrix by scaling and squaring with a Taylor core;
/// independent of any spectral identity.
inline Mat exp_taylor(const Mat& m) {
  double nrm = m.norm();
  int s = 0;
  while (nrm > 0.25 && s < 60) {
    nrm *= 0.5;
    ++s;
  }
  Mat a = m / std::pow(2.0, s);
  Mat term = Mat::Identity(m.rows(), m.cols());
  Mat acc = term;
  for (int k = 1; k <= 16; ++k) {
    term = term * a / static_cast<double>(k);
    acc += term;
  }
  for (int i = 0; i < s; ++i) acc = acc * acc;
  return acc;
}

}  // namespace detail

/// Integral of a scalar on S over the grid box, under the grid's density
/// mode. F takes global (t, y) coordinates.
inline IntegrationResult integrate_on_s(const SChart& chart, const QuadratureGrid& grid,
                                        const std::function<double(const Vec&)>& f,
                                        bool truncation_ok = false) {
  require(grid.dims() == chart.m(), Errc::ConfigError,
          "grid dimension must equal dim S");
  const int r = chart.rank();
  const int n = chart.dim_n();
  std::function<double(const Vec&)> integrand;
  switch (grid.density()) {
    case Density::PlainDnDa:
      integrand = f;
      break;
    case Density::VolumeNA:
      integrand = [&chart, f](const Vec& x) {
        return f(x) * std::exp(-chart.two_rho_t(x));
      };
      break;
    case Density::VolumeAN:
      integrand = [&chart, f, r, n](const Vec& x) {
        Vec z = x;
        for (int j = 0; j < n; ++j) z[r + j] *= chart.exp_alpha(j, x);
        return f(z);
      };
      break;
  }
  detail::check_boundary_mass(grid, integrand, truncation_ok);
  double v1 = grid.weighted_sum(grid.order(), integrand);
  double v2 = grid.weighted_sum(grid.err_order(), integrand);
  return {v1, std::abs(v1 - v2)};
}

/// e^{2 rho(log a)} against det(Ad a |_n), with log a = sum tau_i H_i in the
/// frame basis. The determinant side exponentiates the matrix of ad(log a)
/// restricted to the n-frame with a Taylor core.
inline std::pair<double, double> jacobian_check(const SChart& chart, const Vec& tau) {
  const int r = chart.rank();
  const int n = chart.dim_n();
  require(tau.size() == r, Errc::ConfigError, "tau must have length r");
  double lhs = std::exp(2.0 * chart.rho().dot(tau));

  const MatrixLieAlgebra& alg = chart.algebra();
  Vec log_a = chart.frame().H * tau;
  Mat ad_t(n, n);
  for (int j = 0; j < n; ++j) {
    Vec br = alg.bracket(log_a, chart.frame().Y.col(j));
    ad_t.col(j) = chart.frame().Y.transpose() * chart.iwasawa().g0 * br;
  }
  double rhs = detail::exp_taylor(ad_t).determinant();
  return {lhs, rhs};
}

/// | integral over N of (Y_j phi) dn |. phi is a function of the y
/// coordinates with its gradient; the grid is over the y-box only.
inline IntegrationResult ibp_residual_n(const SChart& chart, int j,
                                        const ScalarOnS& phi,
                                        const QuadratureGrid& y_grid,
                                        bool truncation_ok = false) {
  require(y_grid.dims() == chart.dim_n(), Errc::ConfigError, "grid must cover y only");
  auto yj_phi = [&](const Vec& y) {
    Vec grad = phi.gradient(y);
    double acc = 0.0;
    for (int c = 0; c < chart.dim_n(); ++c) {
      double v = chart.p(j, c).eval(y);
      if (v != 0.0) acc += v * grad[c];
    }
    return acc;
  };
  detail::check_boundary_mass(y_grid, [&](const Vec& y) { return phi(y); }, truncation_ok);
  double v1 = y_grid.weighted_sum(y_grid.order(), yj_phi);
  double v2 = y_grid.weighted_sum(y_grid.err_order(), yj_phi);
  return {std::abs(v1), std::abs(v1 - v2)};
}

/// | integral over A' of (H_i phi) da' |, i >= 1 indexing H_2..H_r. phi is a
/// function of t' = (t^2..t^r) with its gradient.
inline IntegrationResult ibp_residual_a(const SChart& chart, int i,
                                        const ScalarOnS& phi,
                                        const QuadratureGrid& t_grid,
                                        bool truncation_ok = false) {
  require(chart.rank() >= 2, Errc::ConfigError, "A' is trivial in rank one");
  require(i >= 1 && i < chart.rank(), Errc::ConfigError, "index must point into A'");
  require(t_grid.dims() == chart.rank() - 1, Errc::ConfigError, "grid must cover t' only");
  auto hi_phi = [&](const Vec& tp) { return phi.gradient(tp)[i - 1]; };
  detail::check_boundary_mass(t_grid, [&](const Vec& tp) { return phi(tp); }, truncation_ok);
  double v1 = t_grid.weighted_sum(t_grid.order(), hi_phi);
  double v2 = t_grid.weighted_sum(t_grid.err_order(), hi_phi);
  return {std::abs(v1), std::abs(v1 - v2)};
}

struct ConjugationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double error = 0.0;
};

/// integral of F over N against det(Ad a|_n) * integral of F(a n a^{-1}).
inline ConjugationCheck conjugation_change_of_vars(const SChart& chart,
                                                   const std::function<double(const Vec&)>& f,
                                                   const Vec& tau,
                                                   const QuadratureGrid& y_grid,
                                                   bool truncation_ok = false) {
  require(y_grid.dims() == chart.dim_n(), Errc::ConfigError, "grid must cover y only");
  const int n = chart.dim_n();
  const int r = chart.rank();

  Vec factor(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < r; ++i) s += tau[i] * chart.alpha(j, i);
    factor[j] = std::exp(s);
  }
  auto conjugated = [&](const Vec& y) { return f((factor.array() * y.array()).matrix()); };

  detail::check_boundary_mass(y_grid, f, truncation_ok);
  detail::check_boundary_mass(y_grid, conjugated, truncation_ok);

  double l1 = y_grid.weighted_sum(y_grid.order(), f);
  double l2 = y_grid.weighted_sum(y_grid.err_order(), f);

  const MatrixLieAlgebra& alg = chart.algebra();
  Vec log_a = chart.frame().H * tau;
  Mat ad_t(n, n);
  for (int j = 0; j < n; ++j) {
    Vec br = alg.bracket(log_a, chart.frame().Y.col(j));
    ad_t.col(j) = chart.frame().Y.transpose() * chart.iwasawa().g0 * br;
  }
  double det = detail::exp_taylor(ad_t).determinant();

  double r1 = det * y_grid.weighted_sum(y_grid.order(), conjugated);
  double r2 = det * y_grid.weighted_sum(y_grid.err_order(), conjugated);

  return {l1, r1, std::abs(l1 - l2) + std::abs(r1 - r2)};
}

}  // namespace symspace
