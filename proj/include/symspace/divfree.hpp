#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "symspace/fields.hpp"
#include "symspace/quadrature.hpp"

namespace symspace {

/// One free component of the structured divergence-free family: component
/// index ell in {1..m-1} (H_2..H_r, then the Y's) and a bump psi on all m
/// coordinates. The component is f^ell = (d/dt^1 - c_ell) psi with
///   c_i    = 2 rho(H_1)                (ell <= r-1, an H component)
///   c_{r+j} = 2 rho(H_1) - alpha_j(H_1) (a Y component),
/// which makes the t^1 moment of the divergence source vanish identically,
/// so the solved f^1 is itself compactly supported (hence f is L^1).
struct DivFreeBumpSpec {
  int ell = 1;
  SeparableBump psi;
};

namespace detail {

inline double divfree_weight(const SChart& chart, int ell) {
  if (ell < chart.rank()) return 2.0 * chart.rho(0);
  return 2.0 * chart.rho(0) - chart.alpha(ell - chart.rank(), 0);
}

}  // namespace detail

/// Closed-form divergence-free field from structured bump data. The ODE for
/// f^1 integrates exactly here: each source term is a total t^1 derivative
/// after the integrating factor, giving
///   f^1 = -sum_ell (X_ell psi^ell - 2 rho~_ell psi^ell),
/// with rho~_ell = rho(H_ell) for H components and 0 for Y components.
inline FieldOnS divfree_bump_field(const SChart& chart,
                                   const std::vector<DivFreeBumpSpec>& specs) {
  const int m = chart.m();
  const int r = chart.rank();
  for (const auto& s : specs)
    require(s.ell >= 1 && s.ell < m, Errc::ConfigError, "free component index in 1..m-1");

  struct Shared {
    const SChart* chart;
    std::vector<DivFreeBumpSpec> specs;
    std::vector<std::vector<std::vector<SparsePoly>>> dp;  // dp[j][c][v] = d p_{jc}/dy^v
  };
  auto sh = std::make_shared<Shared>();
  sh->chart = &chart;
  sh->specs = specs;
  const int n = chart.dim_n();
  sh->dp.assign(n, std::vector<std::vector<SparsePoly>>(n, std::vector<SparsePoly>(n)));
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < n; ++c)
      for (int v = 0; v < n; ++v) sh->dp[j][c][v] = chart.p(j, c).partial(v);

  FieldOnS f;
  f.comp.resize(m);

  // components 1..m-1: (d/dt1 - c_ell) psi summed over matching specs
  for (int ell = 1; ell < m; ++ell) {
    double c_ell = detail::divfree_weight(chart, ell);
    f.comp[ell] = ScalarOnS{
        [sh, ell, c_ell](const Vec& x) {
          double acc = 0.0;
          for (const auto& s : sh->specs) {
            if (s.ell != ell) continue;
            acc += s.psi.gradient(x)[0] - c_ell * s.psi.value(x);
          }
          return acc;
        },
        [sh, ell, c_ell](const Vec& x) {
          Vec g = Vec::Zero(x.size());
          for (const auto& s : sh->specs) {
            if (s.ell != ell) continue;
            for (int k = 0; k < x.size(); ++k)
              g[k] += s.psi.partial2(x, 0, k) - c_ell * s.psi.gradient(x)[k];
          }
          return g;
        }};
  }

  // f^1 = -sum_ell (X_ell psi^ell - 2 rho~_ell psi^ell)
  auto x_ell_psi = [sh, r, n](const SeparableBump& psi, int ell, const Vec& x) {
    const SChart& ch = *sh->chart;
    if (ell < r) return psi.gradient(x)[ell];
    int j = ell - r;
    double factor = ch.exp_alpha(j, x);
    Vec y = ch.y_part(x);
    Vec grad = psi.gradient(x);
    double acc = 0.0;
    for (int c = 0; c < n; ++c) {
      double pv = ch.p(j, c).eval(y);
      if (pv != 0.0) acc += pv * grad[r + c];
    }
    return factor * acc;
  };
  // coordinate partial of X_ell psi
  auto d_x_ell_psi = [sh, r, n](const SeparableBump& psi, int ell, const Vec& x, int k) {
    const SChart& ch = *sh->chart;
    if (ell < r) return psi.partial2(x, ell, k);
    int j = ell - r;
    double factor = ch.exp_alpha(j, x);
    Vec y = ch.y_part(x);
    Vec grad = psi.gradient(x);
    double sum_p_grad = 0.0, sum_dp_grad = 0.0, sum_p_hess = 0.0;
    for (int c = 0; c < n; ++c) {
      double pv = ch.p(j, c).eval(y);
      if (pv != 0.0) {
        sum_p_grad += pv * grad[r + c];
        sum_p_hess += pv * psi.partial2(x, r + c, k);
      }
      if (k >= r) {
        double dpv = sh->dp[j][c][k - r].eval(y);
        if (dpv != 0.0) sum_dp_grad += dpv * grad[r + c];
      }
    }
    double out = factor * sum_p_hess;
    if (k < r) out += factor * ch.alpha(j, k) * sum_p_grad;
    if (k >= r) out += factor * sum_dp_grad;
    return out;
  };

  f.comp[0] = ScalarOnS{
      [sh, x_ell_psi, r](const Vec& x) {
        double acc = 0.0;
        for (const auto& s : sh->specs) {
          double rho_t = s.ell < r ? sh->chart->rho(s.ell) : 0.0;
          acc -= x_ell_psi(s.psi, s.ell, x) - 2.0 * rho_t * s.psi.value(x);
        }
        return acc;
      },
      [sh, d_x_ell_psi, r](const Vec& x) {
        Vec g = Vec::Zero(x.size());
        for (const auto& s : sh->specs) {
          double rho_t = s.ell < r ? sh->chart->rho(s.ell) : 0.0;
          Vec pg = s.psi.gradient(x);
          for (int k = 0; k < x.size(); ++k)
            g[k] -= d_x_ell_psi(s.psi, s.ell, x, k) - 2.0 * rho_t * pg[k];
        }
        return g;
      }};
  return f;
}

struct DivFreeOdeOptions {
  double step = 1e-3;          // RK4 step for the t^1 integration
  double richardson_tol = 1e-8;
};

/// Generic path: free components f^2..f^m given as coefficient functions;
/// f^1 is solved along the H_1 lines by the integrating-factor ODE
///   d/dt1 (e^{-2 rho_1 t1} f^1) = -e^{-2 rho_1 t1} g,  f^1(t1_max) = 0,
/// integrated with fixed-step RK4 and cached per line; a Richardson pass at
/// double step bounds the integration error. The boundary decay of f^1 at
/// the t^1 faces of the box is checked (NoDecay otherwise).
inline FieldOnS make_divfree_field(const SChart& chart,
                                   std::vector<ScalarOnS> free_components,
                                   const Mat& box, DivFreeOdeOptions opt = {}) {
  const int m = chart.m();
  require(static_cast<int>(free_components.size()) == m - 1, Errc::ConfigError,
          "need m-1 free components");
  require(box.cols() == m, Errc::ConfigError, "box must cover all m coordinates");

  struct LineCache {
    const SChart* chart;
    std::vector<ScalarOnS> free_comps;  // components 1..m-1
    double t_lo, t_hi, step;
    double rho1;
    double richardson = 0.0;
    std::map<std::vector<double>, HermiteTable> lines;
    std::mutex mu;

    double source(double t1, const std::vector<double>& rest) const {
      Vec x(chart->m());
      x[0] = t1;
      for (int i = 1; i < chart->m(); ++i) x[i] = rest[i - 1];
      double g = 0.0;
      for (int l = 1; l < chart->m(); ++l) {
        g += chart->frame_apply(l, x, free_comps[l - 1].gradient(x));
        if (l < chart->rank()) g -= 2.0 * chart->rho(l) * free_comps[l - 1](x);
      }
      return g;
    }

    HermiteTable integrate_line(const std::vector<double>& rest, double h) const {
      int nsteps = static_cast<int>(std::ceil((t_hi - t_lo) / h));
      double hh = (t_hi - t_lo) / nsteps;
      std::vector<double> vals(nsteps + 1), ders(nsteps + 1);
      // downward sweep of dF/dt = 2 rho1 F - g with F(t_hi) = 0
      double f = 0.0;
      vals[nsteps] = 0.0;
      ders[nsteps] = 2.0 * rho1 * f - source(t_hi, rest);
      auto rhs = [&](double t, double v) { return 2.0 * rho1 * v - source(t, rest); };
      for (int s = nsteps; s > 0; --s) {
        double t = t_lo + s * hh;
        double k1 = rhs(t, f);
        double k2 = rhs(t - 0.5 * hh, f - 0.5 * hh * k1);
        double k3 = rhs(t - 0.5 * hh, f - 0.5 * hh * k2);
        double k4 = rhs(t - hh, f - hh * k3);
        f -= hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        vals[s - 1] = f;
        ders[s - 1] = rhs(t - hh, f);
      }
      return HermiteTable(t_lo, hh, std::move(vals), std::move(ders));
    }

    const HermiteTable& line(const std::vector<double>& rest) {
      std::lock_guard<std::mutex> lock(mu);
      auto it = lines.find(rest);
      if (it != lines.end()) return it->second;
      HermiteTable table = integrate_line(rest, step);
      if (lines.empty()) {
        // Richardson check on the first line: halve the step
        HermiteTable finer = integrate_line(rest, 0.5 * step);
        double worst = 0.0;
        for (int q = 0; q <= 16; ++q) {
          double t = t_lo + (t_hi - t_lo) * q / 16.0;
          worst = std::max(worst, std::abs(table.value(t) - finer.value(t)));
        }
        richardson = worst;
      }
      return lines.emplace(rest, std::move(table)).first->second;
    }
  };

  auto cache = std::make_shared<LineCache>();
  cache->chart = &chart;
  cache->free_comps = free_components;
  cache->t_lo = box(0, 0);
  cache->t_hi = box(1, 0);
  cache->step = opt.step;
  cache->rho1 = chart.rho(0);

  FieldOnS f;
  f.comp.resize(m);
  for (int l = 1; l < m; ++l) f.comp[l] = free_components[l - 1];

  auto rest_of = [m](const Vec& x) {
    std::vector<double> rest(m - 1);
    for (int i = 1; i < m; ++i) rest[i - 1] = x[i];
    return rest;
  };
  f.comp[0] = ScalarOnS{
      [cache, rest_of](const Vec& x) { return cache->line(rest_of(x)).value(x[0]); },
      [cache, rest_of, m](const Vec& x) {
        Vec g(m);
        g[0] = cache->line(rest_of(x)).derivative(x[0]);
        for (int i = 1; i < m; ++i) {
          double h = 1e-4 * (1.0 + std::abs(x[i]));
          Vec xp = x, xm = x;
          xp[i] += h;
          xm[i] -= h;
          g[i] = (cache->line(rest_of(xp)).value(x[0]) -
                  cache->line(rest_of(xm)).value(x[0])) /
                 (2.0 * h);
        }
        return g;
      }};

  // boundary decay of f^1 on the t^1 faces
  {
    double t_scale = 0.0;
    double worst = 0.0;
    const int samples = 64;
    auto rng = make_rng(1234, 99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int s = 0; s < samples; ++s) {
      Vec x(m);
      for (int i = 1; i < m; ++i)
        x[i] = box(0, i) + unif(rng) * (box(1, i) - box(0, i));
      x[0] = box(0, 0);
      worst = std::max(worst, std::abs(f.comp[0](x)));
      x[0] = box(1, 0);
      worst = std::max(worst, std::abs(f.comp[0](x)));
      x[0] = 0.5 * (box(0, 0) + box(1, 0));
      t_scale = std::max(t_scale, std::abs(f.comp[0](x)));
    }
    require(worst <= 1e-10 * std::max(1.0, t_scale), Errc::NoDecay,
            "f^1 does not decay at the t^1 box faces; enlarge the box");
  }
  return f;
}

/// Largest |div f| over a coarse lattice in the box.
inline double max_divergence_residual(const FieldOnS& f, const SChart& chart,
                                      const Mat& box, int per_axis = 6) {
  const int m = chart.m();
  std::vector<int> idx(m, 0);
  Vec x(m);
  double worst = 0.0;
  while (true) {
    for (int k = 0; k < m; ++k) {
      double u = per_axis == 1 ? 0.5 : static_cast<double>(idx[k]) / (per_axis - 1);
      x[k] = box(0, k) + u * (box(1, k) - box(0, k));
    }
    worst = std::max(worst, std::abs(divergence(f, chart, x)));
    int k = 0;
    while (k < m && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == m) break;
  }
  return worst;
}

/// Random structured divergence-free field: one or two bumps per component.
inline FieldOnS random_divfree_field(const SChart& chart, std::mt19937_64& rng,
                                     const Mat& box, double margin = 0.7,
                                     double amp_lo = 0.3, double amp_hi = 1.5) {
  std::vector<DivFreeBumpSpec> specs;
  std::uniform_int_distribution<int> count(1, 2);
  for (int ell = 1; ell < chart.m(); ++ell) {
    int c = count(rng);
    for (int k = 0; k < c; ++k)
      specs.push_back(DivFreeBumpSpec{ell, random_bump(rng, box, margin, amp_lo, amp_hi)});
  }
  return divfree_bump_field(chart, specs);
}

}  // namespace symspace
