#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>

#include "symspace/chart.hpp"
#include "symspace/fields.hpp"
#include "symspace/quadrature.hpp"

namespace symspace {

/// Friedrichs mollifier eta(x) = c_d exp(-1/(1-|x|^2)) on the unit ball,
/// normalized to unit mass by a composite radial rule; a second radial rule
/// cross-checks the normalization.
class Mollifier {
 public:
  explicit Mollifier(int d) : d_(d) {
    double i1 = radial_integral(d, 60, 40);
    double i2 = radial_integral(d, 48, 64);
    norm_ = 1.0 / i1;
    mass_residual_ = std::abs(i1 - i2) / i1;
  }

  int dim() const { return d_; }
  /// relative disagreement of the two normalization rules
  double mass_residual() const { return mass_residual_; }

  double value(const Vec& z) const {
    double r2 = z.squaredNorm();
    if (r2 >= 1.0) return 0.0;
    return norm_ * std::exp(-1.0 / (1.0 - r2));
  }

  Vec gradient(const Vec& z) const {
    double r2 = z.squaredNorm();
    if (r2 >= 1.0) return Vec::Zero(d_);
    double w = 1.0 - r2;
    double v = norm_ * std::exp(-1.0 / w);
    return (-2.0 / (w * w) * v) * z;
  }

  static const Mollifier& get(int d) {
    static std::mutex mu;
    static std::map<int, Mollifier> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(d);
    if (it == cache.end()) it = cache.emplace(d, Mollifier(d)).first;
    return it->second;
  }

  /// Surface area of the unit sphere S^{d-1}.
  static double sphere_area(int d) {
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
  }

  static double radial_integral(int d, int order, int panels) {
    double rad = integrate_1d(
        [d](double r) {
          double w = 1.0 - r * r;
          return w <= 0.0 ? 0.0 : std::exp(-1.0 / w) * std::pow(r, d - 1);
        },
        0.0, 1.0, order, panels);
    return sphere_area(d) * rad;
  }

 private:
  int d_;
  double norm_ = 1.0;
  double mass_residual_ = 0.0;
};

/// Scalar on R^d with a support box.
struct ScalarRd {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;  // optional; FD fallback
  Mat support;                          // 2 x d

  double operator()(const Vec& x) const { return value(x); }
  Vec gradient(const Vec& x) const {
    if (grad) return grad(x);
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
      double h = 1e-5 * (1.0 + std::abs(x[i]));
      xp[i] = x[i] + h;
      xm[i] = x[i] - h;
      g[i] = (value(xp) - value(xm)) / (2.0 * h);
      xp[i] = x[i];
      xm[i] = x[i];
    }
    return g;
  }
};

struct SplitMeasurements {
  int case_id = 0;  // 0: plain R^d split; 1/2: the S' cases
  double sup_phi1 = 0.0;
  double sup_phi2 = 0.0;
  double sup_grad_phi2 = 0.0;
  double norm_lp = 0.0;       // ||Phi||_p
  double norm_grad_lp = 0.0;  // ||dPhi||_p (R^d) or ||grad' Phi||_p (S')
  double norm_w1p = 0.0;
  double ratio1 = 0.0;  // sup|Phi1|  / (lambda^{1-d/p} . norm)
  double ratio2 = 0.0;  // sup|Phi2|  / (lambda^{-d/p}  . norm)
  double ratio3 = 0.0;  // sup|dPhi2| / (lambda^{-d/p}  . norm)
  double eps0 = 0.0;
  double lattice_spacing = 0.0;
};

struct SplitResult {
  std::function<double(const Vec&)> phi1;
  std::function<double(const Vec&)> phi2;
  std::function<Vec(const Vec&)> grad_phi2;  // coordinate gradient (R^d) or
                                             // S' frame derivatives X_2..X_m
  double lambda = 0.0;
  double p = 0.0;
  SplitMeasurements measured;
};

struct SplitOptions {
  int z_order = 0;       // 0: pick by dimension
  int norm_order = 0;    // 0: pick by dimension
  int sup_per_axis = 0;  // 0: pick by dimension
  double margin_factor = 1.0;

  static int default_z_order(int d) {
    switch (d) {
      case 1: return 48;
      case 2: return 20;
      case 3: return 10;
      default: return 7;
    }
  }
  static int default_norm_order(int d) {
    switch (d) {
      case 1: return 48;
      case 2: return 32;
      case 3: return 16;
      default: return 12;
    }
  }
  static int default_sup_per_axis(int d) {
    switch (d) {
      case 1: return 513;
      case 2: return 49;
      case 3: return 13;
      default: return 7;
    }
  }
};

namespace detail {

/// max |f| over a uniform lattice in the box.
inline double sup_on_lattice(const std::function<double(const Vec&)>& f, const Mat& box,
                             int per_axis) {
  const int d = static_cast<int>(box.cols());
  std::vector<int> idx(d, 0);
  Vec x(d);
  double best = 0.0;
  while (true) {
    for (int k = 0; k < d; ++k) {
      double u = per_axis == 1 ? 0.5 : static_cast<double>(idx[k]) / (per_axis - 1);
      x[k] = box(0, k) + u * (box(1, k) - box(0, k));
    }
    best = std::max(best, std::abs(f(x)));
    int k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  return best;
}

inline Mat enlarge_box(const Mat& box, double margin) {
  Mat out = box;
  out.row(0).array() -= margin;
  out.row(1).array() += margin;
  return out;
}

inline bool box_contains(const Mat& outer, const Mat& inner) {
  for (int k = 0; k < outer.cols(); ++k)
    if (inner(0, k) < outer(0, k) || inner(1, k) > outer(1, k)) return false;
  return true;
}

/// Unit-ball tensor nodes for the mollification integral: (z, eta weight,
/// grad-eta weight), box weights folded in.
struct MollifyRule {
  std::vector<Vec> z;
  std::vector<double> wv;
  std::vector<Vec> wg;

  MollifyRule(int d, int order) {
    const Mollifier& eta = Mollifier::get(d);
    const QuadRule& rule = gauss_legendre(order);
    std::vector<int> idx(d, 0);
    Vec zz(d);
    while (true) {
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        zz[k] = rule.x[idx[k]];
        w *= rule.w[idx[k]];
      }
      if (zz.squaredNorm() < 1.0) {
        double v = eta.value(zz);
        if (v != 0.0) {
          z.push_back(zz);
          wv.push_back(w * v);
          wg.push_back(w * eta.gradient(zz));
        }
      }
      int k = 0;
      while (k < d && ++idx[k] == order) idx[k++] = 0;
      if (k == d) break;
    }
  }
};

inline const MollifyRule& mollify_rule(int d, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, MollifyRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(d, order);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, MollifyRule(d, order)).first;
  return it->second;
}

}  // namespace detail

/// Euclidean mollification split Phi = (Phi - Phi*eta_l) + Phi*eta_l with the
/// three sup/norm ratios measured over the grid box.
inline SplitResult mollify_split_rd(const ScalarRd& phi, double lambda, double p,
                                    const Mat& grid_box, SplitOptions opts = {}) {
  const int d = static_cast<int>(phi.support.cols());
  require(p > d, Errc::BadExponent, "need p > d");
  require(lambda > 0, Errc::BadExponent, "need lambda > 0");
  require(detail::box_contains(grid_box, phi.support), Errc::SupportLeak,
          "Phi support must lie inside the grid box");

  if (opts.z_order == 0) opts.z_order = SplitOptions::default_z_order(d);
  if (opts.norm_order == 0) opts.norm_order = SplitOptions::default_norm_order(d);
  if (opts.sup_per_axis == 0) opts.sup_per_axis = SplitOptions::default_sup_per_axis(d);

  const auto& rule = detail::mollify_rule(d, opts.z_order);
  auto value_fn = phi.value;

  auto phi2 = [value_fn, lambda, &rule](const Vec& x) {
    KahanSum acc;
    for (std::size_t i = 0; i < rule.z.size(); ++i)
      acc.add(rule.wv[i] * value_fn(x - lambda * rule.z[i]));
    return acc.value();
  };
  // d(Phi * eta_l) = Phi * (d eta)_l / lambda
  auto grad_phi2 = [value_fn, lambda, &rule, d](const Vec& x) {
    Vec acc = Vec::Zero(d);
    for (std::size_t i = 0; i < rule.z.size(); ++i)
      acc += rule.wg[i] * value_fn(x - lambda * rule.z[i]);
    return (acc / lambda).eval();
  };
  auto phi1 = [value_fn, phi2](const Vec& x) { return value_fn(x) - phi2(x); };

  Mat meas_box = detail::enlarge_box(phi.support, lambda * opts.margin_factor);
  SplitMeasurements m;
  m.case_id = 0;
  m.sup_phi1 = detail::sup_on_lattice(phi1, meas_box, opts.sup_per_axis);
  m.sup_phi2 = detail::sup_on_lattice(phi2, meas_box, opts.sup_per_axis);
  m.sup_grad_phi2 = detail::sup_on_lattice(
      [&](const Vec& x) { return grad_phi2(x).norm(); }, meas_box, opts.sup_per_axis);

  QuadratureGrid norm_grid(phi.support, opts.norm_order,
                           std::max(4, opts.norm_order - 6));
  m.norm_lp = std::pow(
      norm_grid.integrate([&](const Vec& x) { return std::pow(std::abs(phi(x)), p); })
          .value,
      1.0 / p);
  m.norm_grad_lp = std::pow(
      norm_grid
          .integrate([&](const Vec& x) { return std::pow(phi.gradient(x).norm(), p); })
          .value,
      1.0 / p);
  m.norm_w1p = m.norm_lp + m.norm_grad_lp;

  double pow1 = std::pow(lambda, 1.0 - d / p);
  double pow2 = std::pow(lambda, -d / p);
  m.ratio1 = m.norm_grad_lp > 0 ? m.sup_phi1 / (pow1 * m.norm_grad_lp) : 0.0;
  m.ratio2 = m.norm_lp > 0 ? m.sup_phi2 / (pow2 * m.norm_lp) : 0.0;
  m.ratio3 = m.norm_grad_lp > 0 ? m.sup_grad_phi2 / (pow2 * m.norm_grad_lp) : 0.0;

  SplitResult res;
  res.phi1 = phi1;
  res.phi2 = phi2;
  res.grad_phi2 = grad_phi2;
  res.lambda = lambda;
  res.p = p;
  res.measured = m;
  return res;
}

// ---------------------------------------------------------------------------
// The S' = A'N side
// ---------------------------------------------------------------------------

/// Scalar on S' given in the global chart coordinates x' = (t^2..t^r, y).
struct SPrimeScalar {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;  // optional
  Mat support;                          // 2 x (m-1)

  double operator()(const Vec& x) const { return value(x); }
  Vec gradient(const Vec& x) const {
    ScalarRd tmp{value, grad, support};
    return tmp.gradient(x);
  }
};

namespace detail {

constexpr int kMaxSprimeDim = 12;

/// Allocation-free S' group operations in the coordinates (t', y), valid for
/// nilpotency step <= 2 where the y-product is u + v + [u,v]/2.
struct SPrimeOps {
  int rp = 0;    // r - 1
  int n = 0;     // dim n
  int dp = 0;    // rp + n
  std::vector<double> alpha;    // n x rp, row-major: alpha_j(H_{i+1})
  std::vector<double> bracket;  // [Y_a, Y_b] = sum_c br[(a*n + b)*n + c] Y_c

  explicit SPrimeOps(const SChart& chart) {
    require(chart.nilpotency_step() <= 2, Errc::NilpotencyOverflow,
            "closed-form S' operations need nilpotency step <= 2");
    rp = chart.rank() - 1;
    n = chart.dim_n();
    dp = rp + n;
    require(dp <= kMaxSprimeDim, Errc::ConfigError, "S' dimension out of range");
    alpha.assign(n * rp, 0.0);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < rp; ++i) alpha[j * rp + i] = chart.alpha(j, i + 1);
    bracket.assign(n * n * n, 0.0);
    const MatrixLieAlgebra& alg = chart.algebra();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Vec br = chart.frame().Y.transpose() * chart.iwasawa().g0 *
                 alg.bracket(chart.frame().Y.col(a), chart.frame().Y.col(b));
        for (int c = 0; c < n; ++c)
          bracket[(a * n + b) * n + c] = std::abs(br[c]) > 1e-12 ? br[c] : 0.0;
      }
  }

  void product(const double* a, const double* b, double* out) const {
    std::array<double, kMaxSprimeDim> yb;
    for (int i = 0; i < rp; ++i) out[i] = a[i] + b[i];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < rp; ++i) s += a[i] * alpha[j * rp + i];
      yb[j] = b[rp + j] * std::exp(s);
    }
    for (int j = 0; j < n; ++j) out[rp + j] = a[rp + j] + yb[j];
    for (int ai = 0; ai < n; ++ai) {
      double ya = a[rp + ai];
      if (ya == 0.0) continue;
      const double* row = &bracket[(ai * n) * n];
      for (int bi = 0; bi < n; ++bi) {
        double yv = yb[bi];
        if (yv == 0.0) continue;
        const double* br = row + bi * n;
        for (int c = 0; c < n; ++c) out[rp + c] += 0.5 * ya * yv * br[c];
      }
    }
  }

  void inverse(const double* a, double* out) const {
    for (int i = 0; i < rp; ++i) out[i] = -a[i];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < rp; ++i) s += -a[i] * alpha[j * rp + i];
      out[rp + j] = -a[rp + j] * std::exp(s);
    }
  }
};

}  // namespace detail

/// Frame matrix of the S' frame {H_2..H_r, Y_1..Y_{m-r}} in the chart
/// coordinates x' (the t^1 direction is absent).
inline Mat sprime_frame_matrix(const SChart& chart, const Vec& xp) {
  const int r = chart.rank();
  const int n = chart.dim_n();
  const int dp = r - 1 + n;
  Mat pm = Mat::Zero(dp, dp);
  for (int i = 0; i + 1 < r; ++i) pm(i, i) = 1.0;
  Vec y = xp.tail(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 1; i < r; ++i) s += xp[i - 1] * chart.alpha(j, i);
    double f = std::exp(s);
    for (int l = 0; l < n; ++l) {
      double v = chart.p(j, l).eval(y);
      if (v != 0.0) pm(r - 1 + l, r - 1 + j) = f * v;
    }
  }
  return pm;
}

/// S' frame derivatives (X_2 Phi, ..., X_m Phi) at x'.
inline Vec sprime_frame_derivatives(const SChart& chart, const SPrimeScalar& phi,
                                    const Vec& xp) {
  Vec grad = phi.gradient(xp);
  return sprime_frame_matrix(chart, xp).transpose() * grad;
}

/// Comparability radius of the S' chart: largest sampled radius at which the
/// frame/coordinate transition matrix keeps all singular values in [1/2, 2].
/// Left invariance of the chart construction makes this center independent.
inline double chart_epsilon0(const SChart& chart, int radius_steps = 40,
                             int sphere_samples = 48) {
  const int dp = chart.m() - 1;
  double good = 0.0;
  for (int s = 1; s <= radius_steps; ++s) {
    double radius = 3.0 * s / radius_steps;
    bool ok = true;
    for (int q = 0; q < sphere_samples && ok; ++q) {
      Vec xp = radius * sphere_point_lowdisc(q + 1, dp);
      Eigen::JacobiSVD<Mat> svd(sprime_frame_matrix(chart, xp));
      double smax = svd.singularValues()(0);
      double smin = svd.singularValues()(dp - 1);
      if (smax > 2.0 || smin < 0.5) ok = false;
    }
    if (!ok) break;
    good = radius;
  }
  require(good > 0, Errc::ConfigError, "no comparability radius found");
  return good;
}

/// L^p norm on S' under ds' (A'N parametrization: block-scaled y, unit
/// weight).
inline double sprime_lp_norm(const SChart& chart,
                             const std::function<double(const Vec&)>& f, double p,
                             const Mat& box, int order) {
  const int r = chart.rank();
  const int n = chart.dim_n();
  QuadratureGrid grid(box, order, std::max(4, order - 6));
  auto res = grid.integrate([&](const Vec& xp) {
    Vec z = xp;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 1; i < r; ++i) s += xp[i - 1] * chart.alpha(j, i);
      z[r - 1 + j] *= std::exp(s);
    }
    return std::pow(std::abs(f(z)), p);
  });
  return std::pow(std::max(res.value, 0.0), 1.0 / p);
}

struct SPrimeSplitOptions : SplitOptions {
  double c1 = 4.0;              // case threshold: lambda >= eps0 / c1
  double spacing_factor = 0.5;  // lattice spacing = eps0 * spacing_factor
  std::vector<Vec> centers;     // optional explicit center list (x' coords)
};

namespace detail {

/// Shared state for the Case-2 evaluators: centers, their inverses, static
/// neighbor lists, and the partition weight machinery.
struct SprimeSplitState {
  const SChart* chart = nullptr;
  SPrimeOps ops;
  std::function<double(const Vec&)> value;
  double lambda = 0.0;
  double delta = 0.0;
  double reach = 0.0;  // chart-ball radius that can contribute to Phi_2
  const MollifyRule* rule = nullptr;
  int dp = 0;

  std::vector<Vec> centers;      // x' coordinates
  std::vector<Vec> centers_inv;  // group inverses, x' coordinates
  // static candidate lists: for each center k, the centers j whose psi can be
  // nonzero somewhere on k's (delta + lambda)-coordinate ball, with the
  // transition g_{jk} = c_j^{-1} c_k precomputed
  std::vector<std::vector<std::pair<int, Vec>>> denom_candidates;

  explicit SprimeSplitState(const SChart& c) : chart(&c), ops(c) {}

  double psi(const double* u) const {
    double acc = 1.0;
    for (int i = 0; i < dp; ++i) {
      double v = std::abs(u[i]) / delta;
      if (v >= 1.0) return 0.0;
      double cc = std::cos(0.5 * M_PI * v);
      acc *= cc * cc;
    }
    return acc;
  }

  /// G_k(u) = w_k(p) Phi(p) at the point p with chart-k coordinates u.
  double weighted_piece(int k, const double* u) const {
    double pk = psi(u);
    if (pk == 0.0) return 0.0;
    std::array<double, kMaxSprimeDim> p_coords;
    ops.product(centers[k].data(), u, p_coords.data());
    Eigen::Map<const Vec> p_vec(p_coords.data(), dp);
    double val = value(p_vec);
    if (val == 0.0) return 0.0;
    double denom = 0.0;
    std::array<double, kMaxSprimeDim> uj;
    for (const auto& [j, gjk] : denom_candidates[k]) {
      (void)j;
      ops.product(gjk.data(), u, uj.data());
      denom += psi(uj.data());
    }
    require(denom > 1e-12, Errc::SupportLeak,
            "partition of unity does not cover the support");
    return pk * val / denom;
  }

  /// centers whose mollified piece can reach the point x'.
  std::vector<std::pair<int, Vec>> contributors(const Vec& xp) const {
    std::vector<std::pair<int, Vec>> out;
    std::array<double, kMaxSprimeDim> u;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      // cheap exact reject on the abelian t' axes
      bool skip = false;
      for (int i = 0; i < ops.rp; ++i)
        if (std::abs(xp[i] - centers[k][i]) >= reach) {
          skip = true;
          break;
        }
      if (skip) continue;
      ops.product(centers_inv[k].data(), xp.data(), u.data());
      bool inside = true;
      for (int i = 0; i < dp; ++i)
        if (std::abs(u[i]) >= reach) {
          inside = false;
          break;
        }
      if (inside) out.emplace_back(static_cast<int>(k), Eigen::Map<Vec>(u.data(), dp));
    }
    return out;
  }

  /// One pass computing Phi_2 and (optionally) its S' frame derivatives.
  double eval(const SChart& chart, const Vec& xp, Vec* frame_grad) const {
    KahanSum acc;
    if (frame_grad) frame_grad->setZero();
    std::array<double, kMaxSprimeDim> u;
    auto cs = contributors(xp);
    for (const auto& [k, uk] : cs) {
      Vec g = Vec::Zero(dp);
      for (std::size_t i = 0; i < rule->z.size(); ++i) {
        for (int c = 0; c < dp; ++c) u[c] = uk[c] - lambda * rule->z[i][c];
        double piece = weighted_piece(k, u.data());
        if (piece == 0.0) continue;
        acc.add(rule->wv[i] * piece);
        if (frame_grad) g += rule->wg[i] * piece;
      }
      if (frame_grad)
        *frame_grad += sprime_frame_matrix(chart, uk).transpose() * (g / lambda);
    }
    return acc.value();
  }
};

}  // namespace detail

/// Decomposition on S' = A'N. Case 1 keeps Phi whole and measures the chart
/// Sobolev bound. Case 2 splits each partition piece Euclideanly in its own
/// centered chart and sums; exactness Phi = Phi_1 + Phi_2 holds by
/// construction and the partition weights are built from left-invariant data
/// only.
inline SplitResult split_on_sprime(const SPrimeScalar& phi, double lambda, double p,
                                   const SChart& chart, const Mat& grid_box,
                                   SPrimeSplitOptions opts = {}) {
  const int dp = chart.m() - 1;
  require(p > dp, Errc::BadExponent, "need p > dim S' = m-1");
  require(lambda > 0, Errc::BadExponent, "need lambda > 0");
  require(detail::box_contains(grid_box, phi.support), Errc::SupportLeak,
          "Phi support must lie inside the grid box");

  if (opts.z_order == 0) opts.z_order = SplitOptions::default_z_order(dp);
  if (opts.norm_order == 0) opts.norm_order = SplitOptions::default_norm_order(dp);
  if (opts.sup_per_axis == 0) opts.sup_per_axis = SplitOptions::default_sup_per_axis(dp);

  double eps0 = chart_epsilon0(chart);

  SplitMeasurements meas;
  meas.eps0 = eps0;
  meas.norm_lp = sprime_lp_norm(chart, phi.value, p, phi.support, opts.norm_order);
  meas.norm_grad_lp = sprime_lp_norm(
      chart,
      [&](const Vec& xp) { return sprime_frame_derivatives(chart, phi, xp).norm(); },
      p, phi.support, opts.norm_order);
  meas.norm_w1p = meas.norm_lp + meas.norm_grad_lp;

  SplitResult res;
  res.lambda = lambda;
  res.p = p;

  if (lambda >= eps0 / opts.c1) {
    // Case 1: Phi_1 = Phi, Phi_2 = 0.
    meas.case_id = 1;
    auto value_fn = phi.value;
    res.phi1 = value_fn;
    res.phi2 = [](const Vec&) { return 0.0; };
    res.grad_phi2 = [dp](const Vec&) { return Vec::Zero(dp).eval(); };
    meas.sup_phi1 = detail::sup_on_lattice(value_fn, phi.support, opts.sup_per_axis);
    double pow1 = std::pow(lambda, 1.0 - dp / p);
    meas.ratio1 = meas.norm_w1p > 0 ? meas.sup_phi1 / (pow1 * meas.norm_w1p) : 0.0;
    res.measured = meas;
    return res;
  }

  // Case 2
  meas.case_id = 2;
  double delta = eps0 * opts.spacing_factor;
  meas.lattice_spacing = delta;

  auto st = std::make_shared<detail::SprimeSplitState>(chart);
  st->value = phi.value;
  st->lambda = lambda;
  st->delta = delta;
  st->reach = delta + lambda;
  st->rule = &detail::mollify_rule(dp, opts.z_order);
  st->dp = dp;

  if (!opts.centers.empty()) {
    st->centers = opts.centers;
  } else {
    // coordinate lattice covering supp Phi; the margin accounts for the
    // coordinate warp of chart balls (factor-2 distortion inside eps0)
    double margin = 2.0 * (delta + lambda);
    Mat cover = detail::enlarge_box(phi.support, margin);
    std::vector<int> counts(dp);
    Vec base(dp);
    for (int k = 0; k < dp; ++k) {
      counts[k] = static_cast<int>(std::floor((cover(1, k) - cover(0, k)) / delta)) + 1;
      base[k] = 0.5 * (cover(0, k) + cover(1, k)) - 0.5 * delta * (counts[k] - 1);
    }
    std::vector<int> idx(dp, 0);
    while (true) {
      Vec c(dp);
      for (int k = 0; k < dp; ++k) c[k] = base[k] + delta * idx[k];
      st->centers.push_back(c);
      int k = 0;
      while (k < dp && ++idx[k] == counts[k]) idx[k++] = 0;
      if (k == dp) break;
    }
  }
  for (const Vec& c : st->centers) {
    Vec inv(dp);
    st->ops.inverse(c.data(), inv.data());
    st->centers_inv.push_back(inv);
  }

  // static denominator candidates: j matters for k when the chart ball of k
  // (radius delta + lambda, dilated by the factor-2 comparability bound) can
  // meet the psi-ball of j
  {
    const int nc = static_cast<int>(st->centers.size());
    st->denom_candidates.assign(nc, {});
    double ball = 2.0 * (2.0 * delta + lambda);
    const int rp = st->ops.rp;
    std::array<double, detail::kMaxSprimeDim> g;
    for (int k = 0; k < nc; ++k) {
      for (int j = 0; j < nc; ++j) {
        // the t' components of c_j^{-1} c_k are exact differences: reject
        // on them before doing the full product
        bool skip = false;
        for (int i = 0; i < rp; ++i)
          if (std::abs(st->centers[k][i] - st->centers[j][i]) >= ball) {
            skip = true;
            break;
          }
        if (skip) continue;
        st->ops.product(st->centers_inv[j].data(), st->centers[k].data(), g.data());
        bool near = true;
        for (int i = 0; i < dp; ++i)
          if (std::abs(g[i]) >= ball) {
            near = false;
            break;
          }
        if (near)
          st->denom_candidates[k].emplace_back(j, Eigen::Map<Vec>(g.data(), dp));
      }
    }
  }

  const SChart* chart_ptr = &chart;
  auto phi2 = [st, chart_ptr](const Vec& xp) { return st->eval(*chart_ptr, xp, nullptr); };
  auto grad_phi2 = [st, chart_ptr](const Vec& xp) {
    Vec g(st->dp);
    st->eval(*chart_ptr, xp, &g);
    return g;
  };

  auto value_fn = phi.value;
  auto phi1 = [value_fn, phi2](const Vec& xp) { return value_fn(xp) - phi2(xp); };

  // one lattice sweep measures all three sups
  Mat meas_box = detail::enlarge_box(phi.support, 2.0 * lambda);
  {
    std::vector<int> idx(dp, 0);
    Vec x(dp), g(dp);
    const int per_axis = opts.sup_per_axis;
    while (true) {
      for (int k = 0; k < dp; ++k) {
        double u = per_axis == 1 ? 0.5 : static_cast<double>(idx[k]) / (per_axis - 1);
        x[k] = meas_box(0, k) + u * (meas_box(1, k) - meas_box(0, k));
      }
      double v2 = st->eval(chart, x, &g);
      meas.sup_phi2 = std::max(meas.sup_phi2, std::abs(v2));
      meas.sup_phi1 = std::max(meas.sup_phi1, std::abs(value_fn(x) - v2));
      meas.sup_grad_phi2 = std::max(meas.sup_grad_phi2, g.norm());
      int k = 0;
      while (k < dp && ++idx[k] == per_axis) idx[k++] = 0;
      if (k == dp) break;
    }
  }

  double pow1 = std::pow(lambda, 1.0 - dp / p);
  double pow2 = std::pow(lambda, -dp / p);
  meas.ratio1 = meas.norm_w1p > 0 ? meas.sup_phi1 / (pow1 * meas.norm_w1p) : 0.0;
  meas.ratio2 = meas.norm_lp > 0 ? meas.sup_phi2 / (pow2 * meas.norm_lp) : 0.0;
  meas.ratio3 = meas.norm_w1p > 0 ? meas.sup_grad_phi2 / (pow2 * meas.norm_w1p) : 0.0;

  res.phi1 = phi1;
  res.phi2 = phi2;
  res.grad_phi2 = grad_phi2;
  res.measured = meas;
  return res;
}

}  // namespace symspace
