#pragma once

#include "symspace/divfree.hpp"
#include "symspace/quadrature.hpp"
#include "symspace/splitting.hpp"

namespace symspace {

struct BBRatioResult {
  double pairing = 0.0;      // integral of <f, phi> dV
  double f_l1 = 0.0;         // ||f||_{L^1(dV)}
  double grad_phi_lm = 0.0;  // ||grad phi||_{L^m(dV)}
  double ratio = 0.0;
};

/// |int <f, phi> dV| / (||f||_L1 ||grad phi||_{L^m}); the grid must be in a
/// volume density mode.
inline BBRatioResult bb_ratio(const FieldOnS& f, const FieldOnS& phi, const SChart& chart,
                              const QuadratureGrid& grid, double divfree_tol = 1e-6,
                              bool truncation_ok = false) {
  double resid = max_divergence_residual(f, chart, grid.box(), 4);
  require(resid <= divfree_tol, Errc::NotDivFree,
          "divergence residual " + std::to_string(resid) + " above tolerance");
  const double m = chart.m();

  BBRatioResult out;
  out.pairing =
      integrate_on_s(chart, grid, [&](const Vec& x) { return f.values(x).dot(phi.values(x)); },
                     truncation_ok)
          .value;
  out.f_l1 = integrate_on_s(chart, grid, [&](const Vec& x) { return f.norm_at(x); },
                            truncation_ok)
                 .value;
  double gm = integrate_on_s(
                  chart, grid,
                  [&](const Vec& x) { return std::pow(gradient_norm(phi, chart, x), m); },
                  truncation_ok)
                  .value;
  out.grad_phi_lm = std::pow(std::max(gm, 0.0), 1.0 / m);
  require(out.f_l1 > 0 && out.grad_phi_lm > 0, Errc::ZeroDenominator,
          "bb_ratio denominators must be positive");
  out.ratio = std::abs(out.pairing) / (out.f_l1 * out.grad_phi_lm);
  return out;
}

/// Same ratio with f, phi, and the integration domain translated by s0. The
/// Haar change of variables maps the translated-domain integral back to the
/// original nodes, so the computation exercises the group operations and the
/// density bookkeeping but is mathematically the same number.
inline BBRatioResult bb_ratio_translated(const FieldOnS& f, const FieldOnS& phi,
                                         const SChart& chart, const QuadratureGrid& grid,
                                         const Vec& s0, bool truncation_ok = false) {
  Vec s0_inv = chart.s_inverse(s0);
  auto roundtrip = [&](const Vec& u) { return chart.s_product(s0_inv, chart.s_product(s0, u)); };
  const double m = chart.m();

  BBRatioResult out;
  out.pairing = integrate_on_s(chart, grid,
                               [&](const Vec& u) {
                                 Vec w = roundtrip(u);
                                 return f.values(w).dot(phi.values(w));
                               },
                               truncation_ok)
                    .value;
  out.f_l1 = integrate_on_s(chart, grid,
                            [&](const Vec& u) { return f.norm_at(roundtrip(u)); },
                            truncation_ok)
                 .value;
  double gm = integrate_on_s(chart, grid,
                             [&](const Vec& u) {
                               return std::pow(gradient_norm(phi, chart, roundtrip(u)), m);
                             },
                             truncation_ok)
                  .value;
  out.grad_phi_lm = std::pow(std::max(gm, 0.0), 1.0 / m);
  require(out.f_l1 > 0 && out.grad_phi_lm > 0, Errc::ZeroDenominator,
          "bb_ratio denominators must be positive");
  out.ratio = std::abs(out.pairing) / (out.f_l1 * out.grad_phi_lm);
  return out;
}

struct Codim1Result {
  double lhs = 0.0;        // |int_{A'} int_N f^1 phi^1 dn da'|
  double rhs = 0.0;        // the three-factor bound
  double ratio = 0.0;      // lhs / rhs (0 when rhs = 0)
  double f_l1_slice = 0.0;
  double f_l1_full = 0.0;
  double phi_w1m = 0.0;
};

/// The codimension-one pairing bound for a chart adapted to v0 (X_1 = H_1):
/// lhs against ||f||_{L1(dnda')}^{1-1/m} ||f||_{L1(dnda)}^{1/m}
/// ||phi||_{W^{1,m}(dnda')}.
inline Codim1Result codim1_pairing(const FieldOnS& f, const FieldOnS& phi,
                                   const SChart& chart, const Mat& sprime_box,
                                   const Mat& s_box, int order = 16,
                                   double divfree_tol = 1e-6,
                                   bool truncation_ok = false) {
  const int m = chart.m();
  const int r = chart.rank();
  const int n = chart.dim_n();
  require(sprime_box.cols() == m - 1, Errc::ConfigError, "S' box must have m-1 axes");
  require(s_box.cols() == m, Errc::ConfigError, "S box must have m axes");
  double resid = max_divergence_residual(f, chart, s_box, 4);
  require(resid <= divfree_tol, Errc::NotDivFree, "field is not divergence free");

  auto embed = [&](const Vec& xp) {
    Vec x = Vec::Zero(m);
    x.tail(m - 1) = xp;
    return x;
  };

  QuadratureGrid slice(sprime_box, order, std::max(4, order - 4));
  QuadratureGrid full(s_box, order, std::max(4, order - 4), Density::PlainDnDa);

  Codim1Result out;
  out.lhs = std::abs(slice
                         .integrate([&](const Vec& xp) {
                           Vec x = embed(xp);
                           return f.comp[0](x) * phi.comp[0](x);
                         })
                         .value);
  out.f_l1_slice =
      slice.integrate([&](const Vec& xp) { return f.norm_at(embed(xp)); }).value;
  out.f_l1_full = integrate_on_s(chart, full, [&](const Vec& x) { return f.norm_at(x); },
                                 truncation_ok)
                      .value;
  // ||phi(a'n)||_{W^{1,m}(dnda')}: the a'n order re-parametrizes N by the
  // Ad(a') block scaling of y
  out.phi_w1m = std::pow(
      slice
          .integrate([&](const Vec& xp) {
            Vec x = embed(xp);
            for (int j = 0; j < n; ++j) {
              double s = 0.0;
              for (int i = 1; i < r; ++i) s += xp[i - 1] * chart.alpha(j, i);
              x[r + j] *= std::exp(s);
            }
            double pv = phi.norm_at(x);
            double gv = gradient_norm(phi, chart, x);
            return std::pow(pv, m) + std::pow(gv, m);
          })
          .value,
      1.0 / m);

  out.rhs = std::pow(out.f_l1_slice, 1.0 - 1.0 / m) * std::pow(out.f_l1_full, 1.0 / m) *
            out.phi_w1m;
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
  return out;
}

struct HardyResult {
  double lhs = 0.0;  // int |h|^p e^{-lambda tau} dtau
  double rhs = 0.0;  // (p/lambda)^p int |h'|^p e^{-lambda tau} dtau
};

/// One-dimensional weighted inequality; h is given with its derivative and a
/// support interval inside [a, b].
inline HardyResult hardy_check(const std::function<double(double)>& h,
                               const std::function<double(double)>& h_deriv,
                               double support_lo, double support_hi, double lambda,
                               double p, double a, double b, int order = 16,
                               int panels = 48) {
  require(lambda > 0, Errc::BadExponent, "need lambda > 0");
  require(p >= 1, Errc::BadExponent, "need p >= 1");
  require(support_lo >= a && support_hi <= b, Errc::SupportLeak,
          "h support must lie inside the interval");
  HardyResult out;
  out.lhs = integrate_1d(
      [&](double t) { return std::pow(std::abs(h(t)), p) * std::exp(-lambda * t); }, a, b,
      order, panels);
  out.rhs = std::pow(p / lambda, p) *
            integrate_1d(
                [&](double t) {
                  return std::pow(std::abs(h_deriv(t)), p) * std::exp(-lambda * t);
                },
                a, b, order, panels);
  return out;
}

struct ManifoldHardyResult {
  double lhs = 0.0;     // ||phi||_{L^p(dV)}
  double rhs = 0.0;     // C_p ||grad phi||_{L^p(dV)}
  double cp = 0.0;      // p / (2 rho(H))
  double rho_h = 0.0;   // rho(H) for the chosen direction
  double ratio = 0.0;   // lhs / rhs
};

/// Direction in a maximizing rho over the unit sphere: the g0-dual of rho in
/// the orthonormal H frame.
inline Vec rho_maximizer(const SChart& chart) {
  Vec rho = chart.rho();
  double nrm = rho.norm();
  require(nrm > 1e-12, Errc::NoPositiveRho, "rho vanishes on a");
  return rho / nrm;
}

/// ||phi||_{L^p(dV)} <= (p / 2 rho(H)) ||grad phi||_{L^p(dV)} with H the
/// sampled-and-exact maximizer of rho on the unit sphere of a.
inline ManifoldHardyResult manifold_hardy_check(const FieldOnS& phi, double p,
                                                const SChart& chart,
                                                const QuadratureGrid& grid,
                                                bool truncation_ok = false) {
  require(p >= 1, Errc::BadExponent, "need p >= 1");
  ManifoldHardyResult out;
  Vec h = rho_maximizer(chart);
  out.rho_h = chart.rho().dot(h);
  require(out.rho_h > 0, Errc::NoPositiveRho, "no direction with rho > 0");
  out.cp = p / (2.0 * out.rho_h);

  double lp = integrate_on_s(chart, grid,
                             [&](const Vec& x) { return std::pow(phi.norm_at(x), p); },
                             truncation_ok)
                  .value;
  double gp = integrate_on_s(
                  chart, grid,
                  [&](const Vec& x) { return std::pow(gradient_norm(phi, chart, x), p); },
                  truncation_ok)
                  .value;
  out.lhs = std::pow(std::max(lp, 0.0), 1.0 / p);
  out.rhs = out.cp * std::pow(std::max(gp, 0.0), 1.0 / p);
  out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
  return out;
}

struct SphereAverageResult {
  double monte_carlo = 0.0;
  double closed_form = 0.0;  // (1/m) <u, u'>
  double std_error = 0.0;
};

/// Monte-Carlo average of <u,v><u',v> over uniform unit v in p against the
/// coordinate-symmetry value <u,u'>/m.
inline SphereAverageResult sphere_average_check(const IwasawaStructure& iw, const Vec& u,
                                                const Vec& u_prime, int samples,
                                                std::uint64_t seed) {
  require(samples >= 10000, Errc::ConfigError, "need at least 1e4 samples");
  const Mat& gram = iw.algebra->killing_gram();
  const Mat& p_basis = iw.cartan.p_basis;
  const int dim_p = static_cast<int>(p_basis.cols());

  // B_theta-orthonormal p-basis is B-orthonormal on p: Gaussian coordinates
  // give the uniform direction on the metric sphere
  auto rng = make_rng(seed, 5);
  std::normal_distribution<double> nd;
  KahanSum sum, sum_sq;
  for (int s = 0; s < samples; ++s) {
    Vec c(dim_p);
    for (int i = 0; i < dim_p; ++i) c[i] = nd(rng);
    Vec v = p_basis * c;
    double nrm = std::sqrt(v.dot(gram * v));
    v /= nrm;
    double val = u.dot(gram * v) * u_prime.dot(gram * v);
    sum.add(val);
    sum_sq.add(val * val);
  }
  SphereAverageResult out;
  out.monte_carlo = sum.value() / samples;
  double var = std::max(sum_sq.value() / samples - out.monte_carlo * out.monte_carlo, 0.0);
  out.std_error = std::sqrt(var / samples);
  out.closed_form = u.dot(gram * u_prime) / dim_p;
  return out;
}

}  // namespace symspace
