#pragma once

#include <random>

#include "symspace/geometry.hpp"

namespace symspace {

/// C^infty bump profile exp(-1/(1-v^2)) on |v| < 1, zero outside.
inline double bump_profile(double v) {
  double w = 1.0 - v * v;
  if (w <= 0.0) return 0.0;
  return std::exp(-1.0 / w);
}

inline double bump_profile_deriv(double v) {
  double w = 1.0 - v * v;
  if (w <= 0.0) return 0.0;
  return std::exp(-1.0 / w) * (-2.0 * v / (w * w));
}

inline double bump_profile_deriv2(double v) {
  double w = 1.0 - v * v;
  if (w <= 0.0) return 0.0;
  // d/dv of exp(-1/w) * (-2v/w^2), w = 1 - v^2
  double e = std::exp(-1.0 / w);
  double a = -2.0 * v / (w * w);
  double da = (-2.0 * w * w - (-2.0 * v) * 2.0 * w * (-2.0 * v)) / (w * w * w * w);
  return e * (a * a + da);
}

/// Polynomial bump (1 - v^2)^k on |v| < 1; C^{k-1} with compact support and
/// fast Gauss-Legendre convergence.
inline double poly_bump_profile(double v, int k) {
  double w = 1.0 - v * v;
  if (w <= 0.0) return 0.0;
  return std::pow(w, k);
}

inline double poly_bump_profile_deriv(double v, int k) {
  double w = 1.0 - v * v;
  if (w <= 0.0) return 0.0;
  return -2.0 * v * k * std::pow(w, k - 1);
}

/// Product of scaled 1-D bumps: amp * prod_k b((x_k - center_k)/width_k).
/// smoothness == 0 uses the C^infty profile; smoothness k >= 1 uses the
/// polynomial profile (1 - v^2)^k, which high-order quadrature resolves to
/// near machine precision.
struct SeparableBump {
  Vec center;
  Vec width;
  double amplitude = 1.0;
  int smoothness = 0;

  double profile(double v) const {
    return smoothness == 0 ? bump_profile(v) : poly_bump_profile(v, smoothness);
  }
  double profile_deriv(double v) const {
    return smoothness == 0 ? bump_profile_deriv(v)
                           : poly_bump_profile_deriv(v, smoothness);
  }
  double profile_deriv2(double v) const {
    if (smoothness == 0) return bump_profile_deriv2(v);
    double w = 1.0 - v * v;
    if (w <= 0.0) return 0.0;
    int k = smoothness;
    return 4.0 * v * v * k * (k - 1) * std::pow(w, k - 2) - 2.0 * k * std::pow(w, k - 1);
  }

  double value(const Vec& x) const {
    double acc = amplitude;
    for (int k = 0; k < center.size(); ++k) {
      acc *= profile((x[k] - center[k]) / width[k]);
      if (acc == 0.0) return 0.0;
    }
    return acc;
  }

  Vec gradient(const Vec& x) const {
    int n = static_cast<int>(center.size());
    Vec vals(n), dervs(n);
    for (int k = 0; k < n; ++k) {
      double v = (x[k] - center[k]) / width[k];
      vals[k] = profile(v);
      dervs[k] = profile_deriv(v) / width[k];
    }
    Vec g(n);
    for (int k = 0; k < n; ++k) {
      double acc = amplitude;
      for (int j = 0; j < n; ++j) acc *= (j == k) ? dervs[j] : vals[j];
      g[k] = acc;
    }
    return g;
  }

  /// second partial d^2 / dx_k dx_l
  double partial2(const Vec& x, int k, int l) const {
    int n = static_cast<int>(center.size());
    double acc = amplitude;
    for (int j = 0; j < n; ++j) {
      double v = (x[j] - center[j]) / width[j];
      int order = (j == k) + (j == l);
      double f;
      if (order == 0)
        f = profile(v);
      else if (order == 1)
        f = profile_deriv(v) / width[j];
      else
        f = profile_deriv2(v) / (width[j] * width[j]);
      acc *= f;
      if (acc == 0.0) return 0.0;
    }
    return acc;
  }
};

inline ScalarOnS scalar_from_bump(SeparableBump b) {
  auto holder = std::make_shared<SeparableBump>(std::move(b));
  return ScalarOnS{[holder](const Vec& x) { return holder->value(x); },
                   [holder](const Vec& x) { return holder->gradient(x); }};
}

inline ScalarOnS scalar_from_bumps(std::vector<SeparableBump> bs) {
  auto holder = std::make_shared<std::vector<SeparableBump>>(std::move(bs));
  return ScalarOnS{[holder](const Vec& x) {
                     double acc = 0.0;
                     for (const auto& b : *holder) acc += b.value(x);
                     return acc;
                   },
                   [holder](const Vec& x) {
                     Vec g = Vec::Zero(x.size());
                     for (const auto& b : *holder) g += b.gradient(x);
                     return g;
                   }};
}

/// Random bump supported inside the box scaled by `margin` (< 1 keeps the
/// support strictly inside).
inline SeparableBump random_bump(std::mt19937_64& rng, const Mat& box, double margin,
                                 double amp_lo = 0.3, double amp_hi = 1.5) {
  int n = static_cast<int>(box.cols());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SeparableBump b;
  b.center.resize(n);
  b.width.resize(n);
  for (int k = 0; k < n; ++k) {
    double lo = box(0, k), hi = box(1, k);
    double half = 0.5 * (hi - lo) * margin;
    double mid = 0.5 * (hi + lo);
    double w = half * (0.25 + 0.5 * unif(rng));
    double c = mid + (2.0 * unif(rng) - 1.0) * (half - w);
    b.center[k] = c;
    b.width[k] = w;
  }
  b.amplitude = amp_lo + (amp_hi - amp_lo) * unif(rng);
  if (unif(rng) < 0.5) b.amplitude = -b.amplitude;
  return b;
}

/// Smooth compactly supported field with 1-2 random bumps per component.
inline FieldOnS random_smooth_field(int m, std::mt19937_64& rng, const Mat& box,
                                    double margin = 0.8) {
  FieldOnS f;
  std::uniform_int_distribution<int> count(1, 2);
  for (int l = 0; l < m; ++l) {
    std::vector<SeparableBump> bs;
    int c = count(rng);
    for (int k = 0; k < c; ++k) bs.push_back(random_bump(rng, box, margin));
    f.comp.push_back(scalar_from_bumps(std::move(bs)));
  }
  return f;
}

/// Left translation of a scalar by the group element with coordinates s0:
/// (L_{s0} F)(x) = F(s0^{-1} x).
inline ScalarOnS translate_scalar(const SChart& chart, const Vec& s0, ScalarOnS f) {
  auto chart_ptr = &chart;
  Vec s0_inv = chart.s_inverse(s0);
  auto inner = std::make_shared<ScalarOnS>(std::move(f));
  return ScalarOnS{
      [chart_ptr, s0_inv, inner](const Vec& x) {
        return inner->value(chart_ptr->s_product(s0_inv, x));
      },
      // chain rule through the group law is not tracked; fall back to FD
      nullptr};
}

/// Left translation of a frame-coefficient field: the frame is left
/// invariant, so coefficients just compose with the translated point.
inline FieldOnS translate_field(const SChart& chart, const Vec& s0, const FieldOnS& f) {
  FieldOnS out;
  for (const auto& c : f.comp) out.comp.push_back(translate_scalar(chart, s0, c));
  return out;
}

}  // namespace symspace
