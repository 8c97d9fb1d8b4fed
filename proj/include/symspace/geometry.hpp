#pragma once

#include <functional>
#include <optional>

#include "symspace/chart.hpp"

namespace symspace {

/// Scalar function on S in chart coordinates, with optional analytic
/// coordinate gradient; otherwise central finite differences.
struct ScalarOnS {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;  // may be empty
  double fd_step = 1e-4;

  double operator()(const Vec& x) const { return value(x); }

  Vec gradient(const Vec& x) const {
    if (grad) return grad(x);
    require(static_cast<bool>(value), Errc::NonDifferentiable, "scalar has no evaluator");
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (int i = 0; i < x.size(); ++i) {
      double h = fd_step * (1.0 + std::abs(x[i]));
      xp[i] = x[i] + h;
      xm[i] = x[i] - h;
      g[i] = (value(xp) - value(xm)) / (2.0 * h);
      xp[i] = x[i];
      xm[i] = x[i];
    }
    return g;
  }
};

inline ScalarOnS zero_scalar() {
  return ScalarOnS{[](const Vec&) { return 0.0; },
                   [](const Vec& x) { return Vec::Zero(x.size()).eval(); }};
}

/// Vector field on S stored as frame coefficients f = sum_l f^l X_l.
struct FieldOnS {
  std::vector<ScalarOnS> comp;

  int m() const { return static_cast<int>(comp.size()); }

  Vec values(const Vec& x) const {
    Vec v(m());
    for (int l = 0; l < m(); ++l) v[l] = comp[l](x);
    return v;
  }

  /// Pointwise g0 norm (the frame is orthonormal).
  double norm_at(const Vec& x) const { return values(x).norm(); }
};

inline FieldOnS zero_field(int m) {
  FieldOnS f;
  f.comp.assign(m, zero_scalar());
  return f;
}

/// Constant-coefficient field sum_l c^l X_l.
inline FieldOnS constant_field(const Vec& coeffs) {
  FieldOnS f;
  for (int l = 0; l < coeffs.size(); ++l) {
    double c = coeffs[l];
    f.comp.push_back(ScalarOnS{[c](const Vec&) { return c; },
                               [](const Vec& x) { return Vec::Zero(x.size()).eval(); }});
  }
  return f;
}

/// Killing metric on s: (B(X,Y) - B(theta X, Y))/2, with membership check.
inline double killing_metric(const IwasawaStructure& iw, const Vec& x, const Vec& y) {
  Mat s(iw.algebra->dim(), iw.m());
  s << iw.a_basis, iw.n_basis;
  Mat gram_s = s.transpose() * iw.cartan.b_theta * s;
  auto check = [&](const Vec& v) {
    Vec c = gram_s.ldlt().solve(s.transpose() * iw.cartan.b_theta * v);
    double resid = (v - s * c).norm();
    require(resid <= 1e-9 * std::max(1.0, v.norm()), Errc::NotInS,
            "argument has a component outside a + n");
  };
  check(x);
  check(y);
  return x.dot(iw.g0 * y);
}

/// div f = -sum_i 2 rho(H_i) f^i + sum_l X_l f^l.
inline double divergence(const FieldOnS& f, const SChart& chart, const Vec& x) {
  double acc = 0.0;
  for (int i = 0; i < chart.rank(); ++i) acc -= 2.0 * chart.rho(i) * f.comp[i](x);
  for (int l = 0; l < chart.m(); ++l)
    acc += chart.frame_apply(l, x, f.comp[l].gradient(x));
  return acc;
}

struct FlowOptions {
  double step = 1e-3;              // fixed RK4 step
  double probe_time = 2e-3;        // central-difference time; Richardson doubles it
  std::optional<Mat> box;          // 2 x m: row 0 lower, row 1 upper bounds
};

namespace detail {

/// RK4 flow of the coordinate velocity field of f together with its
/// variational (Jacobian) system. Returns (x(s), det D Phi_s(x)).
inline std::pair<Vec, double> flow_with_jacobian(const FieldOnS& f, const SChart& chart,
                                                 Vec x, double time,
                                                 const FlowOptions& opt) {
  const int m = chart.m();
  auto velocity = [&](const Vec& z) -> Vec {
    Vec c(m);
    for (int l = 0; l < m; ++l) c[l] = f.comp[l](z);
    return chart.frame_matrix(z) * c;
  };
  auto jac = [&](const Vec& z) -> Mat {
    Mat j(m, m);
    Vec zp = z, zm = z;
    for (int k = 0; k < m; ++k) {
      double h = 1e-5 * (1.0 + std::abs(z[k]));
      zp[k] = z[k] + h;
      zm[k] = z[k] - h;
      j.col(k) = (velocity(zp) - velocity(zm)) / (2.0 * h);
      zp[k] = z[k];
      zm[k] = z[k];
    }
    return j;
  };

  int nsteps = std::max(1, static_cast<int>(std::ceil(std::abs(time) / opt.step)));
  double h = time / nsteps;
  Mat d = Mat::Identity(m, m);
  for (int s = 0; s < nsteps; ++s) {
    Vec k1 = velocity(x);
    Mat j1 = jac(x);
    Vec k2 = velocity(x + 0.5 * h * k1);
    Mat j2 = jac(x + 0.5 * h * k1);
    Vec k3 = velocity(x + 0.5 * h * k2);
    Mat j3 = jac(x + 0.5 * h * k2);
    Vec k4 = velocity(x + h * k3);
    Mat j4 = jac(x + h * k3);

    Mat m1 = j1 * d;
    Mat m2 = j2 * (d + 0.5 * h * m1);
    Mat m3 = j3 * (d + 0.5 * h * m2);
    Mat m4 = j4 * (d + h * m3);

    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    d += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);

    if (opt.box) {
      for (int k = 0; k < m; ++k)
        require(x[k] >= (*opt.box)(0, k) && x[k] <= (*opt.box)(1, k), Errc::FlowEscape,
                "flow left the chart box");
    }
  }
  return {x, d.determinant()};
}

}  // namespace detail

/// Independent divergence: the finite-difference Lie derivative of the
/// volume form under the flow of f (test oracle only).
inline double divergence_oracle(const FieldOnS& f, const SChart& chart, const Vec& x,
                                const FlowOptions& opt = {}) {
  auto density = [&](const Vec& z) { return std::exp(-chart.two_rho_t(z)); };
  auto probe = [&](double s) {
    auto [xp, detp] = detail::flow_with_jacobian(f, chart, x, s, opt);
    auto [xm, detm] = detail::flow_with_jacobian(f, chart, x, -s, opt);
    return (density(xp) * detp - density(xm) * detm) / (2.0 * s * density(x));
  };
  double g1 = probe(opt.probe_time);
  double g2 = probe(2.0 * opt.probe_time);
  return (4.0 * g1 - g2) / 3.0;
}

/// nabla_X X_l for constant frame coefficients X (S-invariant fields).
inline Vec covariant_derivative(const SChart& chart, const Vec& x_coeffs, int l) {
  Vec out = Vec::Zero(chart.m());
  for (int k = 0; k < chart.m(); ++k)
    if (x_coeffs[k] != 0.0) out += x_coeffs[k] * chart.nabla(k, l);
  return out;
}

/// Same Koszul computation against an arbitrary invariant metric given by its
/// coordinate matrix; used to check metric-independence of the connection.
inline Vec covariant_derivative_with_metric(const SChart& chart, const Mat& metric,
                                            const Vec& x_coeffs, int l) {
  const MatrixLieAlgebra& alg = chart.algebra();
  Mat frame = chart.frame().X();
  const int m = chart.m();
  auto ip = [&](const Vec& a, const Vec& b) { return a.dot(metric * b); };
  Mat gram(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) gram(a, b) = ip(frame.col(a), frame.col(b));
  Vec x_alg = frame * x_coeffs;
  Vec xl = frame.col(l);
  Vec rhs(m);
  for (int k = 0; k < m; ++k) {
    Vec xk = frame.col(k);
    rhs[k] = 0.5 * (ip(alg.bracket(x_alg, xl), xk) - ip(alg.bracket(x_alg, xk), xl) -
                    ip(alg.bracket(xl, xk), x_alg));
  }
  return gram.ldlt().solve(rhs);
}

/// |nabla phi| at x: Frobenius norm of the (1,1) tensor in the frame,
/// A(k,l) = X_k phi^l + sum_j phi^j Gamma^l_{kj}.
inline double gradient_norm(const FieldOnS& phi, const SChart& chart, const Vec& x) {
  const int m = chart.m();
  Vec vals = phi.values(x);
  std::vector<Vec> grads(m);
  for (int l = 0; l < m; ++l) grads[l] = phi.comp[l].gradient(x);
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      double a = chart.frame_apply(k, x, grads[l]);
      for (int j = 0; j < m; ++j) a += vals[j] * chart.gamma(k, l, j);
      acc += a * a;
    }
  }
  return std::sqrt(acc);
}

}  // namespace symspace
