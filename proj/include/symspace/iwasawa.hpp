#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <memory>
#include <optional>
#include <vector>

#include "symspace/cartan.hpp"
#include "symspace/lie_algebra.hpp"
#include "symspace/linalg.hpp"

namespace symspace {

/// One restricted root: the functional values alpha(H_i) on the a-basis, a
/// B_theta-orthonormal basis of its root space, and the multiplicity.
struct RestrictedRoot {
  Vec alpha;  // length r, values on a_basis columns
  Mat space;  // dim x multiplicity, coordinates
  int multiplicity() const { return static_cast<int>(space.cols()); }
};

/// Iwasawa data attached to one choice of maximal abelian a in p and one
/// positive system: roots, root spaces, grading, half-sum rho, n-basis.
struct IwasawaStructure {
  std::shared_ptr<const MatrixLieAlgebra> algebra;
  CartanData cartan;
  Mat a_basis;      // dim x r, g0-orthonormal columns
  Mat zero_space;   // dim x dim(g_0), B_theta-orthonormal
  std::vector<RestrictedRoot> roots;  // all of Sigma
  std::vector<int> positive;          // indices into roots, sorted by (d, lex)
  std::vector<int> simple;            // indices into roots
  std::vector<int> d_of_positive;     // grading, parallel to `positive`
  Vec rho;                            // rho(H_i) on a_basis, with multiplicity
  Mat n_basis;                        // dim x (m - r), g0-orthonormal, sorted by grading
  Mat g0;                             // metric matrix (B(X,Y) - B(theta X, Y))/2

  int rank() const { return static_cast<int>(a_basis.cols()); }
  int dim_n() const { return static_cast<int>(n_basis.cols()); }
  int m() const { return rank() + dim_n(); }

  double g0_inner(const Vec& x, const Vec& y) const { return x.dot(g0 * y); }
};

/// Ordered g0-orthonormal basis of s = a + n: H_1..H_r first, then root
/// vectors Y_j each inside a single root space, sorted by grading.
struct GoodFrame {
  std::shared_ptr<const MatrixLieAlgebra> algebra;
  Mat H;                  // dim x r
  Mat Y;                  // dim x (m - r)
  Mat alpha;              // (m-r) x r: alpha_j(H_i) on the frame H's
  std::vector<int> d;     // grading d(alpha_j) per Y column
  std::vector<int> root_index;  // index into IwasawaStructure::roots per Y
  Vec rho;                // rho(H_i) on the frame H's

  int rank() const { return static_cast<int>(H.cols()); }
  int m() const { return static_cast<int>(H.cols() + Y.cols()); }

  /// X_1..X_m: H's then Y's.
  Mat X() const {
    Mat x(H.rows(), m());
    x << H, Y;
    return x;
  }
};

namespace detail {

/// Joint commutant of the span of `a_cols` inside p, as p-coefficient columns.
inline Mat commutant_in_p(const MatrixLieAlgebra& g, const CartanData& cd,
                          const Mat& a_cols) {
  const int dp = cd.dim_p();
  const int k = static_cast<int>(a_cols.cols());
  Mat sys(k * g.dim(), dp);
  for (int i = 0; i < k; ++i)
    sys.middleRows(i * g.dim(), g.dim()) = g.ad(a_cols.col(i)) * cd.p_basis;
  return nullspace(sys, 1e-10);
}

}  // namespace detail

/// Maximal abelian subalgebra of p, optionally containing `seed` (unit g0
/// norm) as its first vector. Returns g0-orthonormal columns. Maximality is
/// certified by the commutant dimension count.
inline Mat maximal_abelian(const MatrixLieAlgebra& g, const CartanData& cd,
                           std::optional<Vec> seed = std::nullopt) {
  const Mat& gram = g.killing_gram();  // g0 = B on p

  Mat a_cols;
  if (seed) {
    Vec s = *seed;
    Vec coeff = cd.p_basis.transpose() * cd.b_theta * s;
    double resid = (s - cd.p_basis * coeff).norm();
    require(resid <= 1e-8 * std::max(1.0, s.norm()), Errc::SeedNotInP,
            "seed is not inside p");
    double nrm = std::sqrt(s.dot(gram * s));
    require(std::abs(nrm - 1.0) <= 1e-6, Errc::SeedNotInP, "seed must have unit g0 norm");
    a_cols = s / nrm;
  } else {
    // deterministic generic-ish start: a fixed combination of the p-basis
    Vec u = Vec::Zero(cd.dim_p());
    for (int i = 0; i < cd.dim_p(); ++i) u[i] = 1.0 + 0.37 * i + 0.013 * i * i;
    Vec s = cd.p_basis * u;
    a_cols = s / std::sqrt(s.dot(gram * s));
  }

  for (int guard = 0; guard <= cd.dim_p(); ++guard) {
    Mat z = detail::commutant_in_p(g, cd, a_cols);  // p-coefficients
    int zdim = static_cast<int>(z.cols());
    int adim = static_cast<int>(a_cols.cols());
    require(zdim >= adim, Errc::SeedNotExtendable,
            "commutant lost the current span (numerical failure)");
    if (zdim == adim) {
      // no element of p outside span(a) commutes with all of a: maximal
      return orthonormalize_columns(a_cols, gram);
    }
    // extend: pick the commutant direction with the largest component
    // orthogonal to the current span (deterministic)
    Mat z_alg = cd.p_basis * z;
    Mat a_on = orthonormalize_columns(a_cols, gram);
    int best = -1;
    double best_resid = 0.0;
    Mat resids(z_alg.rows(), zdim);
    for (int c = 0; c < zdim; ++c) {
      Vec v = z_alg.col(c);
      for (int j = 0; j < a_on.cols(); ++j) v -= a_on.col(j).dot(gram * v) * a_on.col(j);
      resids.col(c) = v;
      double r = std::sqrt(std::max(v.dot(gram * v), 0.0));
      if (r > best_resid) {
        best_resid = r;
        best = c;
      }
    }
    require(best >= 0 && best_resid > 1e-10, Errc::SeedNotExtendable,
            "commutant exceeds span but no extension direction found");
    Vec nv = resids.col(best) / best_resid;
    // sign convention for determinism
    for (int i = 0; i < nv.size(); ++i) {
      if (std::abs(nv[i]) > 1e-9) {
        if (nv[i] < 0) nv = -nv;
        break;
      }
    }
    a_cols.conservativeResize(Eigen::NoChange, adim + 1);
    a_cols.col(adim) = nv;
  }
  fail(Errc::SeedNotExtendable, "maximal abelian extension did not terminate");
}

/// Simultaneous eigendecomposition of {ad H : H in a}: restricted roots with
/// B_theta-orthonormal root spaces and the zero space g_0. Retries with a
/// fresh random generic element when eigenvalue clusters collide.
inline IwasawaStructure restricted_roots(std::shared_ptr<const MatrixLieAlgebra> g,
                                         const CartanData& cd, const Mat& a_basis,
                                         std::uint64_t rng_seed = 12345) {
  const MatrixLieAlgebra& alg = *g;
  const int dim = alg.dim();
  const int r = static_cast<int>(a_basis.cols());

  Mat q(dim, dim);
  q << cd.k_basis, cd.p_basis;
  Mat q_dual = q.transpose() * cd.b_theta;  // q_dual * q = I

  std::vector<Mat> ad_h(r);
  std::vector<double> ad_scale(r);
  for (int i = 0; i < r; ++i) {
    ad_h[i] = alg.ad(a_basis.col(i));
    ad_scale[i] = std::max(1.0, ad_h[i].norm());
  }

  auto rng = make_rng(rng_seed, 7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  const int max_retries = 8;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Vec gamma(r);
    if (attempt == 0 && r == 1)
      gamma[0] = 1.0;
    else
      for (int i = 0; i < r; ++i) gamma[i] = unif(rng);

    Vec h_star = a_basis * gamma;
    Mat m = q_dual * alg.ad(h_star) * q;
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    const Vec& ev = es.eigenvalues();
    double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-30);
    double cluster_tol = 1e-8 * scale;

    // group sorted eigenvalues into clusters
    std::vector<std::pair<int, int>> clusters;  // [begin, end)
    int begin = 0;
    for (int i = 1; i <= dim; ++i) {
      if (i == dim || ev[i] - ev[i - 1] > cluster_tol) {
        clusters.emplace_back(begin, i);
        begin = i;
      }
    }

    IwasawaStructure iw;
    iw.algebra = g;
    iw.cartan = cd;
    iw.a_basis = a_basis;
    iw.g0 = 0.5 * (alg.killing_gram() - cd.theta.transpose() * alg.killing_gram());
    iw.g0 = 0.5 * (iw.g0 + iw.g0.transpose());

    bool ok = true;
    for (const auto& [b, e] : clusters) {
      Mat space = q * es.eigenvectors().middleCols(b, e - b);  // B_theta-orthonormal
      Vec alpha(r);
      for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        for (int c = 0; c < space.cols(); ++c)
          acc += space.col(c).dot(cd.b_theta * (ad_h[i] * space.col(c)));
        alpha[i] = acc / space.cols();
      }
      // certify the cluster as a joint eigenspace of all ad H_i
      for (int i = 0; i < r && ok; ++i)
        for (int c = 0; c < space.cols() && ok; ++c) {
          Vec resid = ad_h[i] * space.col(c) - alpha[i] * space.col(c);
          if (resid.norm() > 1e-7 * ad_scale[i]) ok = false;
        }
      if (!ok) break;
      if (alpha.norm() <= 1e-7) {
        iw.zero_space = space;
      } else {
        iw.roots.push_back(RestrictedRoot{alpha, space});
      }
    }
    if (!ok) continue;  // GenericityFailure: retry with a new H*

    int total = static_cast<int>(iw.zero_space.cols());
    for (const auto& rt : iw.roots) total += rt.multiplicity();
    require(total == dim, Errc::GenericityFailure, "root space dimensions do not sum to dim");

    // canonical order: lexicographic in rounded alpha values
    std::sort(iw.roots.begin(), iw.roots.end(),
              [](const RestrictedRoot& x, const RestrictedRoot& y) {
                for (int i = 0; i < x.alpha.size(); ++i) {
                  double a = std::round(x.alpha[i] * 1e9), b = std::round(y.alpha[i] * 1e9);
                  if (a != b) return a < b;
                }
                return false;
              });
    return iw;
  }
  fail(Errc::GenericityFailure, "no generic element found after 8 retries");
}

/// Sign of a root against a direction in a, with a deterministic
/// lexicographic perturbation for roots vanishing on the direction.
inline int root_sign(const Vec& alpha, const Vec& direction) {
  double s = alpha.dot(direction);
  double tol = 1e-9 * std::max(1.0, alpha.norm() * direction.norm());
  if (std::abs(s) > tol) return s > 0 ? 1 : -1;
  for (int i = 0; i < alpha.size(); ++i)
    if (std::abs(alpha[i]) > 1e-9 * std::max(1.0, alpha.norm()))
      return alpha[i] > 0 ? 1 : -1;
  return 0;
}

/// Select the positive system alpha(direction) > 0, find simple roots, solve
/// the non-negative integer grading, and assemble rho and the n-basis.
inline void choose_positive(IwasawaStructure& iw, const Vec& direction) {
  const int r = iw.rank();
  const int nroots = static_cast<int>(iw.roots.size());
  iw.positive.clear();
  iw.simple.clear();

  for (int i = 0; i < nroots; ++i) {
    int s = root_sign(iw.roots[i].alpha, direction);
    require(s != 0, Errc::GenericityFailure, "zero root escaped the zero cluster");
    if (s > 0) iw.positive.push_back(i);
  }

  auto is_sum_of_two = [&](int idx) {
    const Vec& a = iw.roots[idx].alpha;
    for (int i : iw.positive)
      for (int j : iw.positive) {
        Vec s = iw.roots[i].alpha + iw.roots[j].alpha;
        if ((s - a).norm() <= 1e-7 * std::max(1.0, a.norm())) return true;
      }
    return false;
  };
  for (int idx : iw.positive)
    if (!is_sum_of_two(idx)) iw.simple.push_back(idx);

  require(!iw.simple.empty(), Errc::NotDecomposable, "no simple roots found");
  Mat s_mat(r, static_cast<int>(iw.simple.size()));
  for (int c = 0; c < s_mat.cols(); ++c) s_mat.col(c) = iw.roots[iw.simple[c]].alpha;

  iw.d_of_positive.assign(iw.positive.size(), 0);
  for (std::size_t k = 0; k < iw.positive.size(); ++k) {
    const Vec& a = iw.roots[iw.positive[k]].alpha;
    Vec coeff = s_mat.colPivHouseholderQr().solve(a);
    double resid = (s_mat * coeff - a).norm();
    int dsum = 0;
    bool integral = resid <= 1e-6 * std::max(1.0, a.norm());
    for (int i = 0; i < coeff.size(); ++i) {
      double rounded = std::round(coeff[i]);
      if (std::abs(coeff[i] - rounded) > 1e-6 || rounded < -0.1) integral = false;
      dsum += static_cast<int>(rounded);
    }
    require(integral && dsum >= 1, Errc::NotDecomposable,
            "positive root has no non-negative integer expansion in simple roots");
    iw.d_of_positive[static_cast<std::size_t>(k)] = dsum;
  }

  // sort positive roots by (grading, lexicographic alpha)
  std::vector<int> order(iw.positive.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (iw.d_of_positive[x] != iw.d_of_positive[y])
      return iw.d_of_positive[x] < iw.d_of_positive[y];
    const Vec& a = iw.roots[iw.positive[x]].alpha;
    const Vec& b = iw.roots[iw.positive[y]].alpha;
    for (int i = 0; i < a.size(); ++i) {
      double u = std::round(a[i] * 1e9), v = std::round(b[i] * 1e9);
      if (u != v) return u < v;
    }
    return false;
  });
  std::vector<int> pos2, d2;
  for (int o : order) {
    pos2.push_back(iw.positive[o]);
    d2.push_back(iw.d_of_positive[o]);
  }
  iw.positive = pos2;
  iw.d_of_positive = d2;

  // rho = (1/2) sum over positive roots with multiplicity
  iw.rho = Vec::Zero(r);
  for (std::size_t k = 0; k < iw.positive.size(); ++k)
    iw.rho += 0.5 * iw.roots[iw.positive[k]].multiplicity() *
              iw.roots[iw.positive[k]].alpha;

  // n-basis: g0-orthonormalized root spaces in canonical order
  int dim_n = 0;
  for (int idx : iw.positive) dim_n += iw.roots[idx].multiplicity();
  iw.n_basis.resize(iw.algebra->dim(), dim_n);
  int col = 0;
  for (int idx : iw.positive) {
    Mat on = orthonormalize_columns(iw.roots[idx].space, iw.g0);
    iw.n_basis.middleCols(col, on.cols()) = on;
    col += static_cast<int>(on.cols());
  }
}

/// Good frame: H_1..H_r (H1 prescribed when given), then per-root-space
/// g0-orthonormal Y_j sorted by grading.
inline GoodFrame good_frame(const IwasawaStructure& iw,
                            std::optional<Vec> h1 = std::nullopt) {
  const int r = iw.rank();
  GoodFrame fr;
  fr.algebra = iw.algebra;

  Mat h_cols(iw.algebra->dim(), r);
  if (h1) {
    Vec v = *h1;
    Vec coeff = iw.a_basis.transpose() * iw.g0 * v;
    double resid = (v - iw.a_basis * coeff).norm();
    require(resid <= 1e-8 * std::max(1.0, v.norm()), Errc::H1NotInA, "H1 outside a");
    double nrm = std::sqrt(v.dot(iw.g0 * v));
    require(std::abs(nrm - 1.0) <= 1e-10, Errc::H1NotUnit, "H1 must have unit g0 norm");
    // complete by Gram-Schmidt over the a-basis, dropping the collapsed column
    Mat cand(iw.algebra->dim(), r + 1);
    cand.col(0) = v;
    cand.rightCols(r) = iw.a_basis;
    int kept = 0;
    Mat acc(iw.algebra->dim(), r);
    for (int c = 0; c < cand.cols() && kept < r; ++c) {
      Vec w = cand.col(c);
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < kept; ++j) w -= acc.col(j).dot(iw.g0 * w) * acc.col(j);
      double nn = std::sqrt(std::max(w.dot(iw.g0 * w), 0.0));
      if (nn > 1e-8) acc.col(kept++) = w / nn;
    }
    require(kept == r, Errc::H1NotInA, "failed to complete H1 to a basis of a");
    h_cols = acc;
    h_cols.col(0) = v;  // keep the caller's vector bit-exactly
  } else {
    h_cols = iw.a_basis;
  }
  fr.H = h_cols;

  int dim_n = iw.dim_n();
  fr.Y.resize(iw.algebra->dim(), dim_n);
  fr.alpha.resize(dim_n, r);
  fr.d.clear();
  fr.root_index.clear();
  int col = 0;
  for (std::size_t k = 0; k < iw.positive.size(); ++k) {
    const RestrictedRoot& rt = iw.roots[iw.positive[k]];
    Mat on = orthonormalize_columns(rt.space, iw.g0);
    for (int c = 0; c < on.cols(); ++c) {
      fr.Y.col(col) = on.col(c);
      for (int i = 0; i < r; ++i)
        fr.alpha(col, i) = rt.alpha.dot(iw.a_basis.transpose() * iw.g0 * fr.H.col(i));
      fr.d.push_back(iw.d_of_positive[k]);
      fr.root_index.push_back(iw.positive[k]);
      ++col;
    }
  }

  fr.rho = Vec::Zero(r);
  for (int i = 0; i < r; ++i) {
    Vec coeff = iw.a_basis.transpose() * iw.g0 * fr.H.col(i);
    fr.rho[i] = iw.rho.dot(coeff);
  }
  return fr;
}

/// Iwasawa decomposition adapted to a unit direction v0 in p: a maximal
/// abelian subalgebra containing v0, a deterministic positive system with
/// alpha(v0) > 0 (lexicographic tie-break on chamber walls), and the frame
/// with H1 = v0.
inline std::pair<IwasawaStructure, GoodFrame> adapted_structure(
    std::shared_ptr<const MatrixLieAlgebra> g, const Vec& v0,
    std::uint64_t rng_seed = 12345) {
  const MatrixLieAlgebra& alg = *g;
  CartanData cd = cartan_split(alg);
  double nrm = std::sqrt(v0.dot(alg.killing_gram() * v0));
  require(std::abs(nrm - 1.0) <= 1e-10, Errc::H1NotUnit, "v0 must have unit g0 norm");

  Mat a_basis = maximal_abelian(alg, cd, v0);
  IwasawaStructure iw = restricted_roots(g, cd, a_basis, rng_seed);
  Vec direction = Vec::Unit(iw.rank(), 0);  // evaluate roots on H1 = v0
  choose_positive(iw, direction);
  GoodFrame fr = good_frame(iw, v0);
  return {std::move(iw), std::move(fr)};
}

/// Default structure for an algebra: deterministic maximal abelian (through
/// `seed` when given), positive system from the first a-basis direction.
inline std::pair<IwasawaStructure, GoodFrame> standard_structure(
    std::shared_ptr<const MatrixLieAlgebra> g, std::uint64_t rng_seed = 12345,
    std::optional<Vec> seed = std::nullopt) {
  CartanData cd = cartan_split(*g);
  Mat a_basis = maximal_abelian(*g, cd, seed);
  IwasawaStructure iw = restricted_roots(g, cd, a_basis, rng_seed);
  choose_positive(iw, Vec::Unit(iw.rank(), 0));
  GoodFrame fr = good_frame(iw);
  return {std::move(iw), std::move(fr)};
}

}  // namespace symspace
