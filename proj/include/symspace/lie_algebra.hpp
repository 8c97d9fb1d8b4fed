#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "symspace/errors.hpp"
#include "symspace/numerics.hpp"

namespace symspace {

/// A finite-dimensional real Lie algebra of q x q matrices, with cached
/// structure constants, adjoint matrices and the Killing Gram matrix.
/// Construction certifies closure, the Jacobi identity, non-degeneracy of the
/// Killing form (semisimplicity) and the existence of a positive direction
/// (non-compactness). Immutable afterwards; all operations are pure.
class MatrixLieAlgebra {
 public:
  enum class Family { SlnR, SOn1, Custom };

  static constexpr int kMaxDim = 64;
  static constexpr double kClosureTol = 1e-10;
  static constexpr double kJacobiTol = 1e-10;
  static constexpr double kStructureTol = 1e-12;
  static constexpr double kDegenerateGap = 1e-8;

  /// sl(n,R): traceless n x n matrices. Basis: diagonal differences
  /// E_ii - E_{i+1,i+1} first, then off-diagonal units E_ij row-major.
  static MatrixLieAlgebra sl(int n) {
    require(n >= 2, Errc::ConfigError, "sl(n,R) needs n >= 2");
    require(n * n - 1 <= kMaxDim, Errc::ConfigError, "sl(n,R) dim exceeds desk scale");
    std::vector<Mat> basis;
    for (int i = 0; i + 1 < n; ++i) {
      Mat h = Mat::Zero(n, n);
      h(i, i) = 1.0;
      h(i + 1, i + 1) = -1.0;
      basis.push_back(h);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        Mat e = Mat::Zero(n, n);
        e(i, j) = 1.0;
        basis.push_back(e);
      }
    return MatrixLieAlgebra(std::move(basis), Family::SlnR);
  }

  /// so(n,1): X^T J + J X = 0 with J = diag(1..1,-1) on R^{n+1}.
  /// Basis: rotations E_ij - E_ji (i<j<=n), then boosts E_{i,n+1} + E_{n+1,i}.
  static MatrixLieAlgebra so_lorentz(int n) {
    require(n >= 2, Errc::ConfigError, "so(n,1) needs n >= 2");
    require(n * (n + 1) / 2 <= kMaxDim, Errc::ConfigError, "so(n,1) dim exceeds desk scale");
    int q = n + 1;
    std::vector<Mat> basis;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Mat r = Mat::Zero(q, q);
        r(i, j) = 1.0;
        r(j, i) = -1.0;
        basis.push_back(r);
      }
    for (int i = 0; i < n; ++i) {
      Mat b = Mat::Zero(q, q);
      b(i, n) = 1.0;
      b(n, i) = 1.0;
      basis.push_back(b);
    }
    return MatrixLieAlgebra(std::move(basis), Family::SOn1);
  }

  /// Arbitrary matrix basis; must be linearly independent and closed under
  /// the commutator to kClosureTol.
  static MatrixLieAlgebra custom(std::vector<Mat> basis) {
    return MatrixLieAlgebra(std::move(basis), Family::Custom);
  }

  int dim() const { return dim_; }
  int matrix_size() const { return q_; }
  Family family() const { return family_; }
  /// Largest Frobenius norm among basis matrices; reference scale for
  /// relative tolerances.
  double scale() const { return scale_; }

  const Mat& basis_matrix(int i) const { return basis_[i]; }
  const std::vector<Mat>& basis() const { return basis_; }

  Mat matrix_of(const Vec& coords) const {
    Mat m = Mat::Zero(q_, q_);
    for (int i = 0; i < dim_; ++i) m += coords[i] * basis_[i];
    return m;
  }

  /// Coordinates of a q x q matrix in the basis; throws NotClosed when the
  /// matrix is not in the span to `tol` (relative).
  Vec coords_of(const Mat& m, double tol = kStructureTol) const {
    Vec rhs = Eigen::Map<const Vec>(m.data(), q_ * q_);
    Vec c = basis_qr_.solve(rhs);
    double resid = (basis_flat_ * c - rhs).norm();
    require(resid <= tol * std::max(1.0, rhs.norm()), Errc::NotClosed,
            "matrix lies outside the basis span (residual " + std::to_string(resid) + ")");
    return c;
  }

  /// Structure constants: [B_i, B_j] = sum_k c(i,j,k) B_k.
  double c(int i, int j, int k) const { return ad_[i](k, j); }

  /// Adjoint matrix of B_i acting on coordinates.
  const Mat& ad_basis(int i) const { return ad_[i]; }

  Mat ad(const Vec& x) const {
    Mat a = Mat::Zero(dim_, dim_);
    for (int i = 0; i < dim_; ++i) a += x[i] * ad_[i];
    return a;
  }

  /// Bracket in coordinates via structure constants. The construction-time
  /// certificate (commutator_residual) guarantees agreement with the matrix
  /// commutator route.
  Vec bracket(const Vec& x, const Vec& y) const { return ad(x) * y; }

  const Mat& killing_gram() const { return gram_; }

  double killing(const Vec& x, const Vec& y) const { return x.dot(gram_ * y); }

  /// max-norm Jacobi residual over all basis triples.
  double jacobi_residual() const { return jacobi_residual_; }
  /// max over basis pairs of ||[B_i,B_j] - sum_k c B_k||_F.
  double commutator_residual() const { return commutator_residual_; }

 private:
  MatrixLieAlgebra(std::vector<Mat> basis, Family family)
      : basis_(std::move(basis)), family_(family) {
    dim_ = static_cast<int>(basis_.size());
    require(dim_ >= 1 && dim_ <= kMaxDim, Errc::ConfigError, "dimension out of range");
    q_ = static_cast<int>(basis_[0].rows());
    for (const Mat& b : basis_)
      require(b.rows() == q_ && b.cols() == q_, Errc::ConfigError,
              "basis matrices must share one square size");

    scale_ = 0.0;
    for (const Mat& b : basis_) scale_ = std::max(scale_, b.norm());

    basis_flat_.resize(q_ * q_, dim_);
    for (int i = 0; i < dim_; ++i)
      basis_flat_.col(i) = Eigen::Map<const Vec>(basis_[i].data(), q_ * q_);
    Eigen::JacobiSVD<Mat> svd(basis_flat_);
    require(svd.rank() == dim_, Errc::ConfigError, "basis matrices are linearly dependent");
    basis_qr_.compute(basis_flat_);

    // closure + structure constants
    double closure_tol = (family_ == Family::Custom) ? kClosureTol : kStructureTol;
    ad_.assign(dim_, Mat::Zero(dim_, dim_));
    commutator_residual_ = 0.0;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) {
        Mat comm = basis_[i] * basis_[j] - basis_[j] * basis_[i];
        Vec rhs = Eigen::Map<const Vec>(comm.data(), q_ * q_);
        Vec cij = basis_qr_.solve(rhs);
        double resid = (basis_flat_ * cij - rhs).norm();
        require(resid <= closure_tol * std::max(1.0, scale_ * scale_),
                Errc::NotClosed, "bracket of basis pair (" + std::to_string(i) + "," +
                    std::to_string(j) + ") leaves the span");
        commutator_residual_ = std::max(commutator_residual_, resid);
        for (int k = 0; k < dim_; ++k) ad_[i](k, j) = cij[k];
      }

    // Jacobi identity, max-norm over all triples. Column k of the operator
    // residual ad([B_i,B_j]) - [ad B_i, ad B_j] is exactly the cyclic triple
    // residual for (i, j, k).
    jacobi_residual_ = 0.0;
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j) {
        Mat ad_bij = Mat::Zero(dim_, dim_);
        for (int k = 0; k < dim_; ++k)
          if (ad_[i](k, j) != 0.0) ad_bij += ad_[i](k, j) * ad_[k];
        Mat resid = ad_bij - (ad_[i] * ad_[j] - ad_[j] * ad_[i]);
        jacobi_residual_ = std::max(jacobi_residual_, resid.cwiseAbs().maxCoeff());
      }
    double bracket_scale = 0.0;
    for (int i = 0; i < dim_; ++i)
      bracket_scale = std::max(bracket_scale, ad_[i].norm());
    require(jacobi_residual_ <= kJacobiTol * std::max(1.0, bracket_scale * bracket_scale),
            Errc::NotClosed, "Jacobi identity fails");

    // Killing Gram matrix
    gram_.resize(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j)
        gram_(i, j) = gram_(j, i) = (ad_[i] * ad_[j]).trace();

    Eigen::JacobiSVD<Mat> gsvd(gram_);
    double smax = gsvd.singularValues()(0);
    double smin = gsvd.singularValues()(dim_ - 1);
    require(smax > 0 && smin >= kDegenerateGap * smax, Errc::Degenerate,
            "Killing form is (numerically) degenerate; algebra not semisimple");
    Eigen::SelfAdjointEigenSolver<Mat> ges(gram_);
    require(ges.eigenvalues().maxCoeff() > 0, Errc::CompactType,
            "Killing form is negative definite; algebra of compact type");
  }

  std::vector<Mat> basis_;
  Family family_;
  int dim_ = 0;
  int q_ = 0;
  double scale_ = 0.0;
  Mat basis_flat_;                      // q^2 x dim
  Eigen::ColPivHouseholderQR<Mat> basis_qr_;
  std::vector<Mat> ad_;
  Mat gram_;
  double jacobi_residual_ = 0.0;
  double commutator_residual_ = 0.0;
};

/// Element of a MatrixLieAlgebra, stored as basis coordinates.
struct AlgebraElement {
  const MatrixLieAlgebra* algebra = nullptr;
  Vec coords;

  Mat matrix() const { return algebra->matrix_of(coords); }
};

inline AlgebraElement element(const MatrixLieAlgebra& g, const Vec& coords) {
  require(coords.size() == g.dim(), Errc::ConfigError, "coordinate length mismatch");
  return AlgebraElement{&g, coords};
}

inline void require_same_algebra(const AlgebraElement& x, const AlgebraElement& y) {
  require(x.algebra != nullptr && x.algebra == y.algebra, Errc::MixedAlgebras,
          "elements belong to different algebras");
}

inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_algebra(x, y);
  return AlgebraElement{x.algebra, x.algebra->bracket(x.coords, y.coords)};
}

inline double killing_form(const AlgebraElement& x, const AlgebraElement& y) {
  require_same_algebra(x, y);
  return x.algebra->killing(x.coords, y.coords);
}

}  // namespace symspace
