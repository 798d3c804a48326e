#include "qsdp/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace qsdp {

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a),
                                            Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

Matrix project_psd(const Matrix& a) {
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
  const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& q = eig.eigenvectors();
  Matrix out = q * clipped.asDiagonal() * q.transpose();
  return symmetrized(out);
}

Matrix psd_factor(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace qsdp
