#pragma once

#include "qsdp/types.hpp"

namespace qsdp {

/// (A + A') / 2
Matrix symmetrized(const Matrix& a);

/// Smallest eigenvalue of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);

/// Frobenius-nearest PSD matrix: symmetrize, clip negative eigenvalues to 0.
Matrix project_psd(const Matrix& a);

/// Factor F with F F' = A after clipping negative eigenvalues; A is n x n,
/// F is n x n (columns scaled by sqrt of the clipped spectrum).
Matrix psd_factor(const Matrix& a);

}  // namespace qsdp
