// Small Hermitian-matrix utilities shared by the model builders.

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pradar {

struct HermitianSqrtPair {
  Eigen::MatrixXcd sqrt;
  Eigen::MatrixXcd inv_sqrt;
};

// Square root and inverse square root of a Hermitian positive-definite
// matrix via eigendecomposition. Eigenvalues below 1e-12 * lambda_max are
// treated as a configuration error: the model assumes strictly PD
// covariances, so near-singularity must fail loudly instead of being
// regularized away.
inline HermitianSqrtPair hermitian_sqrt_pair(const Eigen::MatrixXcd& m,
                                             const std::string& label) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(label + ": matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(label + ": eigendecomposition failed");
  }
  const Eigen::VectorXd evals = es.eigenvalues();
  const double lambda_max = evals.maxCoeff();
  const double floor = 1e-12 * lambda_max;
  if (lambda_max <= 0.0 || evals.minCoeff() < floor) {
    throw std::invalid_argument(label + ": covariance is not positive definite (eigenvalue " +
                                std::to_string(evals.minCoeff()) + " below floor " +
                                std::to_string(floor) + ")");
  }
  const Eigen::VectorXd root = evals.cwiseSqrt();
  HermitianSqrtPair out;
  out.sqrt = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
  out.inv_sqrt =
      es.eigenvectors() * root.cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  return out;
}

// Inverse of a Hermitian PD matrix with the same eigenvalue floor policy.
inline Eigen::MatrixXcd hermitian_inverse(const Eigen::MatrixXcd& m, const std::string& label) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(label + ": eigendecomposition failed");
  }
  const Eigen::VectorXd evals = es.eigenvalues();
  const double lambda_max = evals.maxCoeff();
  if (lambda_max <= 0.0 || evals.minCoeff() < 1e-12 * lambda_max) {
    throw std::invalid_argument(label + ": matrix is numerically singular");
  }
  return es.eigenvectors() * evals.cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

inline bool has_orthonormal_columns(const Eigen::MatrixXcd& basis, double tol) {
  const Eigen::MatrixXcd gram = basis.adjoint() * basis;
  return (gram - Eigen::MatrixXcd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff() <=
         tol;
}

inline bool is_hermitian(const Eigen::MatrixXcd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Hermitian and positive semidefinite, up to a tolerance relative to the
// largest eigenvalue magnitude.
inline bool is_hermitian_psd(const Eigen::MatrixXcd& m, double tol) {
  if (!is_hermitian(m, tol)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

}  // namespace pradar
