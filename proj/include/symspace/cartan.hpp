#pragma once

#include <Eigen/Dense>

#include "symspace/lie_algebra.hpp"
#include "symspace/linalg.hpp"

namespace symspace {

/// Cartan decomposition data for theta X = -X^T: the involution pushed to
/// basis coordinates, the +1/-1 eigenspaces, and the positive definite form
/// B_theta(X,Y) = -B(X, theta Y).
struct CartanData {
  Mat theta;    // dim x dim, on coordinates
  Mat k_basis;  // columns span the +1 eigenspace, B_theta-orthonormal
  Mat p_basis;  // columns span the -1 eigenspace, B_theta-orthonormal
  Mat b_theta;  // dim x dim, positive definite

  int dim_k() const { return static_cast<int>(k_basis.cols()); }
  int dim_p() const { return static_cast<int>(p_basis.cols()); }
};

inline CartanData cartan_split(const MatrixLieAlgebra& g) {
  const int dim = g.dim();
  Mat theta(dim, dim);
  for (int i = 0; i < dim; ++i) {
    Mat ti = -g.basis_matrix(i).transpose();
    try {
      theta.col(i) = g.coords_of(ti, 1e-10);
    } catch (const Error&) {
      fail(Errc::ThetaNotAutomorphism, "X -> -X^T does not preserve the basis span");
    }
  }

  require((theta * theta - Mat::Identity(dim, dim)).cwiseAbs().maxCoeff() <= 1e-12,
          Errc::ThetaNotAutomorphism, "theta^2 != id");

  // automorphism check on basis pairs
  double bracket_scale = 1.0;
  for (int i = 0; i < dim; ++i) bracket_scale = std::max(bracket_scale, g.ad_basis(i).norm());
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      Vec lhs = theta * g.ad_basis(i).col(j);
      Vec rhs = g.bracket(theta.col(i), theta.col(j));
      require((lhs - rhs).norm() <= 1e-10 * bracket_scale, Errc::ThetaNotAutomorphism,
              "theta[X,Y] != [theta X, theta Y] on basis pair");
    }

  Mat b_theta = -g.killing_gram() * theta;
  b_theta = 0.5 * (b_theta + b_theta.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(b_theta);
  require(es.eigenvalues().minCoeff() > 0, Errc::BThetaNotPositive,
          "-B(X, theta Y) is not positive definite");

  // eigenspace split via the projectors (I +- theta)/2
  auto eigenspace = [&](double sign) {
    Mat proj = 0.5 * (Mat::Identity(dim, dim) + sign * theta);
    Eigen::JacobiSVD<Mat> svd(proj, Eigen::ComputeFullU);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 0.5) ++rank;
    Mat span = svd.matrixU().leftCols(rank);
    return orthonormalize_columns(span, b_theta);
  };

  CartanData cd;
  cd.theta = theta;
  cd.b_theta = b_theta;
  cd.k_basis = eigenspace(+1.0);
  cd.p_basis = eigenspace(-1.0);
  require(cd.dim_k() + cd.dim_p() == dim, Errc::ThetaNotAutomorphism,
          "eigenspace dimensions do not fill the algebra");
  return cd;
}

}  // namespace symspace
