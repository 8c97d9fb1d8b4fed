#pragma once

#include <Eigen/Dense>

#include "symspace/errors.hpp"
#include "symspace/numerics.hpp"

namespace symspace {

/// Modified Gram-Schmidt (two passes) of the columns of V under the inner
/// product x^T gram y. Column order is preserved; the first column keeps its
/// direction. gram must be positive definite on span(V).
inline Mat orthonormalize_columns(const Mat& v, const Mat& gram) {
  Mat q = v;
  auto ip = [&](const Vec& a, const Vec& b) { return a.dot(gram * b); };
  for (int j = 0; j < q.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < j; ++k) {
        Vec qk = q.col(k);
        q.col(j) -= ip(qk, q.col(j)) * qk;
      }
    double nrm = std::sqrt(std::max(ip(q.col(j), q.col(j)), 0.0));
    require(nrm > 1e-12, Errc::Degenerate, "column collapsed during orthonormalization");
    q.col(j) /= nrm;
  }
  return q;
}

/// Orthonormal (Euclidean) basis of the nullspace of A; columns of the result.
inline Mat nullspace(const Mat& a, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  double smax = s.size() > 0 ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * std::max(smax, 1.0)) ++rank;
  int n = static_cast<int>(a.cols());
  return svd.matrixV().rightCols(n - rank);
}

/// exp of a nilpotent matrix by its (exact) finite series.
inline Mat exp_nilpotent(const Mat& n) {
  int q = static_cast<int>(n.rows());
  Mat result = Mat::Identity(q, q);
  Mat term = Mat::Identity(q, q);
  for (int k = 1; k <= q; ++k) {
    term = term * n / static_cast<double>(k);
    if (term.norm() == 0.0) break;
    result += term;
  }
  return result;
}

/// log of a unipotent matrix (U - I nilpotent) by its finite series.
inline Mat log_unipotent(const Mat& u) {
  int q = static_cast<int>(u.rows());
  Mat x = u - Mat::Identity(q, q);
  Mat result = Mat::Zero(q, q);
  Mat term = Mat::Identity(q, q);
  for (int k = 1; k <= q; ++k) {
    term = term * x;
    if (term.norm() == 0.0) break;
    result += (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k) * term;
  }
  return result;
}

/// exp of a symmetric matrix via its eigendecomposition.
inline Mat exp_symmetric(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace symspace
