#include <catch2/catch_amalgamated.hpp>

#include "symspace/cartan.hpp"
#include "symspace/lie_algebra.hpp"

using namespace symspace;

namespace {

Vec random_coords(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = nd(rng);
  return v;
}

}  // namespace

TEST_CASE("sl(2,R) basis and brackets") {
  auto g = MatrixLieAlgebra::sl(2);
  REQUIRE(g.dim() == 3);

  // basis order: H = diag(1,-1), E = e12, F = e21
  Mat h = g.basis_matrix(0), e = g.basis_matrix(1), f = g.basis_matrix(2);
  REQUIRE(h(0, 0) == 1.0);
  REQUIRE(h(1, 1) == -1.0);
  REQUIRE(e(0, 1) == 1.0);
  REQUIRE(f(1, 0) == 1.0);

  Vec ch = Vec::Unit(3, 0), ce = Vec::Unit(3, 1), cf = Vec::Unit(3, 2);
  // [E,F] = H and [H,E] = 2E, straight from the 2x2 commutators
  REQUIRE((g.bracket(ce, cf) - ch).norm() < 1e-14);
  REQUIRE((g.bracket(ch, ce) - 2.0 * ce).norm() < 1e-14);
  REQUIRE(g.bracket(ce, ce).norm() == 0.0);
}

TEST_CASE("sl(2,R) Killing values against explicit ad-matrix oracle") {
  auto g = MatrixLieAlgebra::sl(2);

  // oracle: ad matrices in the basis {H, E, F} written out from the bracket
  // table [H,E]=2E, [H,F]=-2F, [E,F]=H
  Mat ad_h(3, 3), ad_e(3, 3), ad_f(3, 3);
  ad_h << 0, 0, 0, 0, 2, 0, 0, 0, -2;
  ad_e << 0, 0, 1, -2, 0, 0, 0, 0, 0;
  ad_f << 0, -1, 0, 0, 0, 0, 2, 0, 0;
  REQUIRE(std::abs((ad_h * ad_h).trace() - 8.0) == 0.0);
  REQUIRE(std::abs((ad_e * ad_f).trace() - 4.0) == 0.0);
  REQUIRE(std::abs((ad_e * ad_e).trace()) == 0.0);

  Vec ch = Vec::Unit(3, 0), ce = Vec::Unit(3, 1), cf = Vec::Unit(3, 2);
  CHECK(std::abs(g.killing(ch, ch) - 8.0) < 1e-10);
  CHECK(std::abs(g.killing(ce, cf) - 4.0) < 1e-10);
  CHECK(std::abs(g.killing(ce, ce)) < 1e-10);

  // the library's ad matrices agree with the hand-written ones
  CHECK((g.ad(ch) - ad_h).norm() < 1e-13);
  CHECK((g.ad(ce) - ad_e).norm() < 1e-13);
  CHECK((g.ad(cf) - ad_f).norm() < 1e-13);
}

TEST_CASE("family dimensions") {
  CHECK(MatrixLieAlgebra::sl(3).dim() == 8);
  CHECK(MatrixLieAlgebra::so_lorentz(3).dim() == 6);
  CHECK(MatrixLieAlgebra::sl(4).dim() == 15);
}

TEST_CASE("structure constants reproduce matrix commutators") {
  for (auto* g : {new MatrixLieAlgebra(MatrixLieAlgebra::sl(3)),
                  new MatrixLieAlgebra(MatrixLieAlgebra::so_lorentz(3))}) {
    CHECK(g->commutator_residual() <= 1e-12);
    CHECK(g->jacobi_residual() <= 1e-10);
    delete g;
  }
}

TEST_CASE("antisymmetry of structure constants") {
  auto g = MatrixLieAlgebra::sl(3);
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j)
      for (int k = 0; k < g.dim(); ++k)
        REQUIRE(g.c(i, j, k) == -g.c(j, i, k));
}

TEST_CASE("sl(n,R) Killing form equals 2n trace(XY)") {
  for (int n : {2, 3, 4}) {
    auto g = MatrixLieAlgebra::sl(n);
    auto rng = make_rng(42, n);
    for (int trial = 0; trial < 25; ++trial) {
      Vec x = random_coords(rng, g.dim()), y = random_coords(rng, g.dim());
      double lhs = g.killing(x, y);
      double rhs = 2.0 * n * (g.matrix_of(x) * g.matrix_of(y)).trace();
      REQUIRE(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("ad-invariance of the Killing form") {
  auto g = MatrixLieAlgebra::so_lorentz(3);
  auto rng = make_rng(7, 0);
  double scale = g.killing_gram().norm();
  for (int trial = 0; trial < 100; ++trial) {
    Vec x = random_coords(rng, g.dim());
    Vec y = random_coords(rng, g.dim());
    Vec z = random_coords(rng, g.dim());
    double r = g.killing(g.bracket(z, x), y) + g.killing(x, g.bracket(z, y));
    REQUIRE(std::abs(r) <= 1e-10 * scale * x.norm() * y.norm() * z.norm());
  }
}

TEST_CASE("theta-invariance of the Killing form") {
  for (int which : {0, 1}) {
    auto g = which == 0 ? MatrixLieAlgebra::sl(3) : MatrixLieAlgebra::so_lorentz(3);
    CartanData cd = cartan_split(g);
    auto rng = make_rng(11, which);
    double scale = g.killing_gram().norm();
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = random_coords(rng, g.dim()), y = random_coords(rng, g.dim());
      double lhs = g.killing(cd.theta * x, cd.theta * y);
      double rhs = g.killing(x, y);
      REQUIRE(std::abs(lhs - rhs) <= 1e-10 * scale * x.norm() * y.norm());
    }
  }
}

TEST_CASE("element wrappers and MixedAlgebras") {
  auto g1 = MatrixLieAlgebra::sl(2);
  auto g2 = MatrixLieAlgebra::sl(2);
  auto x = element(g1, Vec::Unit(3, 0));
  auto y = element(g2, Vec::Unit(3, 1));
  CHECK_THROWS_AS(bracket(x, y), Error);
  try {
    killing_form(x, y);
    FAIL("expected MixedAlgebras");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::MixedAlgebras);
  }
}

TEST_CASE("custom basis: closure and rejection paths") {
  // a scaled copy of sl(2,R) passes
  auto sl2 = MatrixLieAlgebra::sl(2);
  std::vector<Mat> scaled;
  for (int i = 0; i < 3; ++i) scaled.push_back(2.0 * sl2.basis_matrix(i));
  CHECK_NOTHROW(MatrixLieAlgebra::custom(scaled));

  // spanned by H and E only: [H,E]=2E closed, but Killing degenerate
  std::vector<Mat> he = {sl2.basis_matrix(0), sl2.basis_matrix(1)};
  try {
    MatrixLieAlgebra::custom(he);
    FAIL("expected Degenerate");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::Degenerate);
  }

  // so(3): compact type
  Mat r12 = Mat::Zero(3, 3), r13 = Mat::Zero(3, 3), r23 = Mat::Zero(3, 3);
  r12(0, 1) = 1;
  r12(1, 0) = -1;
  r13(0, 2) = 1;
  r13(2, 0) = -1;
  r23(1, 2) = 1;
  r23(2, 1) = -1;
  try {
    MatrixLieAlgebra::custom({r12, r13, r23});
    FAIL("expected CompactType");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::CompactType);
  }

  // H, E plus a matrix that brackets outside the span
  Mat odd = Mat::Zero(2, 2);
  odd(1, 0) = 1.0;
  odd(0, 0) = 0.5;
  try {
    MatrixLieAlgebra::custom({sl2.basis_matrix(0), sl2.basis_matrix(1), odd});
    FAIL("expected NotClosed");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::NotClosed);
  }
}
