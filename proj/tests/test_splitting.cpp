#include <catch2/catch_amalgamated.hpp>

#include "symspace/splitting.hpp"

using namespace symspace;

namespace {

std::shared_ptr<const MatrixLieAlgebra> shared_alg(int which) {
  switch (which) {
    case 0: return std::make_shared<const MatrixLieAlgebra>(MatrixLieAlgebra::sl(2));
    case 1: return std::make_shared<const MatrixLieAlgebra>(MatrixLieAlgebra::sl(3));
    default: return std::make_shared<const MatrixLieAlgebra>(MatrixLieAlgebra::so_lorentz(3));
  }
}

SChart make_chart(int which) {
  auto g = shared_alg(which);
  auto [iw, fr] = standard_structure(g);
  return bch_vector_fields(iw, fr);
}

ScalarRd rd_bump(int d, double width, double amplitude = 1.0) {
  SeparableBump b;
  b.center = Vec::Zero(d);
  b.width = Vec::Constant(d, width);
  b.amplitude = amplitude;
  Mat support(2, d);
  support.row(0).setConstant(-width);
  support.row(1).setConstant(width);
  auto holder = std::make_shared<SeparableBump>(b);
  return ScalarRd{[holder](const Vec& x) { return holder->value(x); },
                  [holder](const Vec& x) { return holder->gradient(x); }, support};
}

Mat sym_box(int d, double half) {
  Mat box(2, d);
  box.row(0).setConstant(-half);
  box.row(1).setConstant(half);
  return box;
}

}  // namespace

TEST_CASE("mollifier: mass, sign, support") {
  for (int d : {1, 2, 4}) {
    const Mollifier& eta = Mollifier::get(d);
    CHECK(eta.mass_residual() <= 1e-12);

    auto rng = make_rng(71, d);
    std::uniform_real_distribution<double> unif(-1.2, 1.2);
    for (int trial = 0; trial < 200; ++trial) {
      Vec z = Vec::NullaryExpr(d, [&](int) { return unif(rng); });
      double v = eta.value(z);
      CHECK(v >= 0.0);
      if (z.norm() >= 1.0) CHECK(v == 0.0);
    }
  }

  // tensor-product cross-check of the unit mass in low dimension
  for (int d : {1, 2}) {
    const Mollifier& eta = Mollifier::get(d);
    Mat box = sym_box(d, 1.0);
    QuadratureGrid grid(box, 32, 24);
    // composite refinement via four panels per axis folded into one call:
    // order 32 with 6 panels reaches ~1e-14 in 1-D, ~1e-15 in 2-D
    double total = 0.0;
    int panels = 6;
    std::vector<int> idx(d, 0);
    while (true) {
      Mat sub(2, d);
      for (int k = 0; k < d; ++k) {
        sub(0, k) = -1.0 + 2.0 * idx[k] / panels;
        sub(1, k) = -1.0 + 2.0 * (idx[k] + 1) / panels;
      }
      QuadratureGrid sg(sub, 32, 24);
      total += sg.integrate([&](const Vec& z) { return eta.value(z); }).value;
      int k = 0;
      while (k < d && ++idx[k] == panels) idx[k++] = 0;
      if (k == d) break;
    }
    CHECK(std::abs(total - 1.0) <= 1e-10);
  }
}

TEST_CASE("mollify split: zero input and exactness") {
  ScalarRd zero{[](const Vec&) { return 0.0; },
                [](const Vec& x) { return Vec::Zero(x.size()).eval(); }, sym_box(1, 1.0)};
  auto res = mollify_split_rd(zero, 0.3, 2.0, sym_box(1, 2.0));
  CHECK(res.measured.sup_phi1 == 0.0);
  CHECK(res.measured.sup_phi2 == 0.0);

  ScalarRd phi = rd_bump(2, 0.8);
  auto split = mollify_split_rd(phi, 0.25, 3.0, sym_box(2, 2.0));
  auto rng = make_rng(73, 0);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x = Vec::NullaryExpr(2, [&](int) { return unif(rng); });
    REQUIRE(std::abs(split.phi1(x) + split.phi2(x) - phi(x)) <= 1e-10);
  }

  // supports stay inside the lambda-enlargement of supp Phi
  for (int trial = 0; trial < 50; ++trial) {
    Vec x = Vec::NullaryExpr(2, [&](int) { return unif(rng); });
    bool outside = false;
    for (int k = 0; k < 2; ++k)
      if (std::abs(x[k]) > 0.8 + 0.25) outside = true;
    if (outside) {
      REQUIRE(std::abs(split.phi2(x)) <= 1e-14);
      REQUIRE(std::abs(split.phi1(x)) <= 1e-14);
    }
  }
}

TEST_CASE("mollify split: guards") {
  ScalarRd phi = rd_bump(2, 0.8);
  CHECK_THROWS_AS(mollify_split_rd(phi, 0.3, 1.5, sym_box(2, 2.0)), Error);  // p <= d
  CHECK_THROWS_AS(mollify_split_rd(phi, 0.3, 3.0, sym_box(2, 0.5)), Error);  // leak
}

TEST_CASE("d=1 Hoelder oracle dominates sup|Phi1| with constant one") {
  double p = 2.0;
  ScalarRd phi = rd_bump(1, 0.9);
  for (double lambda : {0.05, 0.2, 0.8}) {
    auto res = mollify_split_rd(phi, lambda, p, sym_box(1, 3.0));
    double bound = std::pow(lambda, 1.0 - 1.0 / p) * res.measured.norm_grad_lp;
    REQUIRE(res.measured.sup_phi1 <= bound * (1.0 + 1e-6));
  }
}

TEST_CASE("d=1 width-family maxima follow the bound exponents") {
  double p = 2.0;
  std::vector<double> lambdas = {0.01, 0.0215, 0.0464, 0.1, 0.215, 0.464, 1.0};
  std::vector<double> m1, m2, m3;
  for (double lambda : lambdas) {
    double best1 = 0.0, best2 = 0.0, best3 = 0.0;
    for (double gamma : {1.0 / 3.0, 0.5, 1.0, 2.0, 4.0}) {
      ScalarRd phi = rd_bump(1, gamma * lambda);
      auto res = mollify_split_rd(phi, lambda, p, sym_box(1, 8.0));
      best1 = std::max(best1, res.measured.sup_phi1 / res.measured.norm_grad_lp);
      best2 = std::max(best2, res.measured.sup_phi2 / res.measured.norm_lp);
      best3 = std::max(best3, res.measured.sup_grad_phi2 / res.measured.norm_grad_lp);
    }
    m1.push_back(best1);
    m2.push_back(best2);
    m3.push_back(best3);
  }
  double s1 = loglog_slope(lambdas, m1);
  double s2 = loglog_slope(lambdas, m2);
  double s3 = loglog_slope(lambdas, m3);
  CHECK(std::abs(s1 - (1.0 - 1.0 / p)) <= 0.1);
  CHECK(std::abs(s2 - (-1.0 / p)) <= 0.1);
  CHECK(std::abs(s3 - (-1.0 / p)) <= 0.1);

  // one-sided: no measured point exceeds the fitted envelope by more than 5%
  auto envelope_check = [&](const std::vector<double>& m, double slope) {
    double logc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      logc += std::log(m[i]) - slope * std::log(lambdas[i]);
    logc /= m.size();
    for (std::size_t i = 0; i < m.size(); ++i)
      REQUIRE(m[i] <= std::exp(logc) * std::pow(lambdas[i], slope) * 1.05);
  };
  envelope_check(m1, s1);
  envelope_check(m2, s2);
  envelope_check(m3, s3);
}

TEST_CASE("doubling lambda moves the family-max ratio by about 2^{-d/p}") {
  double p = 3.0;
  int d = 2;
  auto family_max_ratio2 = [&](double lambda) {
    double best = 0.0;
    for (double gamma : {0.5, 1.0, 2.0}) {
      ScalarRd phi = rd_bump(d, gamma * lambda);
      auto res = mollify_split_rd(phi, lambda, p, sym_box(d, 4.0));
      best = std::max(best, res.measured.ratio2);
    }
    return best;
  };
  double r1 = family_max_ratio2(0.2);
  double r2 = family_max_ratio2(0.4);
  double factor = 1.0;  // ratio2 already normalizes by lambda^{-d/p}
  CHECK(r2 / r1 >= factor / 1.5);
  CHECK(r2 / r1 <= factor * 1.5);
}

TEST_CASE("measured constant stable across random bump widths") {
  double p = 2.0, lambda = 1.0;
  auto rng = make_rng(79, 0);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  std::vector<double> cs;
  for (int rep = 0; rep < 10; ++rep) {
    double c_measured = 0.0;
    for (int i = 0; i < 4; ++i) {
      ScalarRd phi = rd_bump(1, lambda * unif(rng));
      auto res = mollify_split_rd(phi, lambda, p, sym_box(1, 10.0));
      c_measured = std::max({c_measured, res.measured.ratio1, res.measured.ratio2,
                             res.measured.ratio3});
    }
    cs.push_back(c_measured);
  }
  double lo = *std::min_element(cs.begin(), cs.end());
  double hi = *std::max_element(cs.begin(), cs.end());
  CHECK(hi / lo <= 1.5);  // "stable" across draws
}

TEST_CASE("chart comparability radius") {
  for (int which : {0, 1, 2}) {
    SChart chart = make_chart(which);
    double eps0 = chart_epsilon0(chart);
    CHECK(eps0 > 0.05);
    CHECK(eps0 <= 3.0);
  }
}

TEST_CASE("S' split on sl(2,R) reduces to the d=1 mollification") {
  SChart chart = make_chart(0);  // r = 1: S' = N is one-dimensional
  double eps0 = chart_epsilon0(chart);

  SeparableBump b;
  b.center = Vec::Zero(1);
  b.width = Vec::Constant(1, 0.9);
  b.amplitude = 1.2;
  Mat support = sym_box(1, 0.9);
  auto holder = std::make_shared<SeparableBump>(b);
  SPrimeScalar phi{[holder](const Vec& x) { return holder->value(x); },
                   [holder](const Vec& x) { return holder->gradient(x); }, support};
  ScalarRd phi_rd{phi.value, phi.grad, support};

  double lambda = 0.8 * eps0 / 4.0;  // Case 2
  double p = 2.0;
  auto s_split = split_on_sprime(phi, lambda, p, chart, sym_box(1, 4.0));
  REQUIRE(s_split.measured.case_id == 2);
  auto rd_split = mollify_split_rd(phi_rd, lambda, p, sym_box(1, 4.0));

  auto rng = make_rng(83, 0);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int trial = 0; trial < 60; ++trial) {
    Vec x = Vec::NullaryExpr(1, [&](int) { return unif(rng); });
    REQUIRE(std::abs(s_split.phi2(x) - rd_split.phi2(x)) <= 1e-10);
    REQUIRE(std::abs(s_split.phi1(x) - rd_split.phi1(x)) <= 1e-10);
  }
}

TEST_CASE("S' split case 1 takes Phi whole") {
  SChart chart = make_chart(0);
  double eps0 = chart_epsilon0(chart);
  SeparableBump b;
  b.center = Vec::Zero(1);
  b.width = Vec::Constant(1, 0.8);
  b.amplitude = 1.0;
  auto holder = std::make_shared<SeparableBump>(b);
  SPrimeScalar phi{[holder](const Vec& x) { return holder->value(x); },
                   [holder](const Vec& x) { return holder->gradient(x); },
                   sym_box(1, 0.8)};
  auto res = split_on_sprime(phi, eps0, 2.0, chart, sym_box(1, 3.0));
  CHECK(res.measured.case_id == 1);
  CHECK(res.phi2(Vec::Zero(1)) == 0.0);
  CHECK(res.phi1(Vec::Zero(1)) == phi(Vec::Zero(1)));
  CHECK(res.measured.ratio1 > 0.0);
  CHECK(std::isfinite(res.measured.ratio1));
}

TEST_CASE("S' split on sl(3,R): exactness and stability across translates") {
  SChart chart = make_chart(1);  // dim S' = 4
  double eps0 = chart_epsilon0(chart);
  double lambda = 0.7 * eps0 / 4.0;
  double p = 5.0;

  SPrimeSplitOptions opts;
  opts.z_order = 4;
  opts.sup_per_axis = 4;
  opts.norm_order = 10;

  auto make_phi = [&](const Vec& center) {
    SeparableBump b;
    b.center = center;
    b.width = Vec::Constant(4, 0.55);
    b.amplitude = 1.0;
    auto holder = std::make_shared<SeparableBump>(b);
    Mat support(2, 4);
    for (int k = 0; k < 4; ++k) {
      support(0, k) = center[k] - 0.55;
      support(1, k) = center[k] + 0.55;
    }
    return SPrimeScalar{[holder](const Vec& x) { return holder->value(x); },
                        [holder](const Vec& x) { return holder->gradient(x); }, support};
  };

  std::vector<double> r1s, r2s, r3s;
  auto rng = make_rng(89, 0);
  std::uniform_real_distribution<double> unif(-0.25, 0.25);
  for (int rep = 0; rep < 5; ++rep) {
    Vec center = Vec::NullaryExpr(4, [&](int) { return rep == 0 ? 0.0 : unif(rng); });
    SPrimeScalar phi = make_phi(center);
    auto res = split_on_sprime(phi, lambda, p, chart, sym_box(4, 3.0), opts);
    REQUIRE(res.measured.case_id == 2);
    REQUIRE(std::isfinite(res.measured.ratio1));
    REQUIRE(std::isfinite(res.measured.ratio2));
    REQUIRE(std::isfinite(res.measured.ratio3));
    r1s.push_back(res.measured.ratio1);
    r2s.push_back(res.measured.ratio2);
    r3s.push_back(res.measured.ratio3);

    // exactness at sample points
    for (int trial = 0; trial < 10; ++trial) {
      Vec x = center + Vec::NullaryExpr(4, [&](int) { return 2.0 * unif(rng); });
      REQUIRE(std::abs(res.phi1(x) + res.phi2(x) - phi(x)) <= 1e-10);
    }
  }
  auto spread = [](const std::vector<double>& v) {
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    return hi / std::max(lo, 1e-300);
  };
  CHECK(spread(r1s) <= 1.5);
  CHECK(spread(r2s) <= 1.5);
  CHECK(spread(r3s) <= 1.5);
}

TEST_CASE("S' split commutes with left translation") {
  SChart chart = make_chart(1);
  double eps0 = chart_epsilon0(chart);
  double lambda = 0.7 * eps0 / 4.0;
  double p = 5.0;
  double delta = eps0 * 0.5;

  SPrimeSplitOptions opts;
  opts.z_order = 4;
  opts.sup_per_axis = 3;
  opts.norm_order = 8;

  SeparableBump b;
  b.center = Vec::Zero(4);
  b.width = Vec::Constant(4, 0.5);
  b.amplitude = 1.0;
  auto holder = std::make_shared<SeparableBump>(b);
  SPrimeScalar phi{[holder](const Vec& x) { return holder->value(x); },
                   [holder](const Vec& x) { return holder->gradient(x); },
                   sym_box(4, 0.5)};

  // explicit small lattice of centers around the support
  std::vector<Vec> centers;
  {
    Mat cover = sym_box(4, 0.5 + 2.0 * (delta + lambda));
    int cnt = static_cast<int>(std::floor((cover(1, 0) - cover(0, 0)) / delta)) + 1;
    std::vector<int> idx(4, 0);
    while (true) {
      Vec c(4);
      for (int k = 0; k < 4; ++k)
        c[k] = -0.5 * delta * (cnt - 1) + delta * idx[k];
      centers.push_back(c);
      int k = 0;
      while (k < 4 && ++idx[k] == cnt) idx[k++] = 0;
      if (k == 4) break;
    }
  }
  opts.centers = centers;
  auto base = split_on_sprime(phi, lambda, p, chart, sym_box(4, 4.0), opts);

  // translate Phi, the centers, and the evaluation points by s0
  Vec s0(4);
  s0 << 0.12, -0.08, 0.05, 0.1;
  Vec s0_full = Vec::Zero(5);
  s0_full.tail(4) = s0;
  Vec s0_inv_full = chart.s_inverse(s0_full);

  auto translate = [&](const Vec& xp) {
    Vec full = Vec::Zero(5);
    full.tail(4) = xp;
    return chart.s_product(s0_full, full).tail(4).eval();
  };
  SPrimeScalar phi_t{[&, holder](const Vec& xp) {
                       Vec full = Vec::Zero(5);
                       full.tail(4) = xp;
                       return holder->value(chart.s_product(s0_inv_full, full).tail(4).eval());
                     },
                     nullptr, sym_box(4, 0.5 + 0.3)};
  SPrimeSplitOptions opts_t = opts;
  opts_t.centers.clear();
  for (const Vec& c : centers) opts_t.centers.push_back(translate(c));
  auto moved = split_on_sprime(phi_t, lambda, p, chart, sym_box(4, 4.0), opts_t);

  auto rng = make_rng(97, 0);
  std::uniform_real_distribution<double> unif(-0.6, 0.6);
  for (int trial = 0; trial < 12; ++trial) {
    Vec x = Vec::NullaryExpr(4, [&](int) { return unif(rng); });
    REQUIRE(std::abs(moved.phi2(translate(x)) - base.phi2(x)) <= 1e-8);
  }
}
