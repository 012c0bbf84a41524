#pragma once

// Thin wrappers over the LAPACKE Hermitian eigensolvers.

#include "twophoton/types.hpp"

namespace twophoton::lapack {

// In-place full diagonalisation: `a` is overwritten by the eigenvectors,
// `w` receives the eigenvalues in ascending order.
void heevd(Matrix& a, RealVector& w);

// Eigenpairs with lower < lambda <= upper.
void heevr_window(const Matrix& a, double lower, double upper, RealVector& w, Matrix& z);

}  // namespace twophoton::lapack
