#pragma once

#include "dpcp/common.hpp"

namespace dpcp {

// Thin SVD, A = U * S.asDiagonal() * V'.
struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};

double soft_threshold(double x, double tau);
Matrix soft_threshold(const Matrix& x, double tau);

// Throws NumericalError if the input is non-finite or the decomposition
// fails to reconstruct the input to working precision.
Svd thin_svd(const Matrix& a);

// Singular value thresholding: U * soft(S, tau) * V'.
Matrix svt(const Matrix& a, double tau);

double nuclear_norm(const Matrix& a);
double spectral_norm(const Matrix& a);

// Entrywise product with a {0,1} mask of identical shape.
Matrix apply_mask(const Matrix& a, const Matrix& mask);

// Solves (A + reg*I) x = b for small symmetric positive definite A via
// Cholesky, with one iterative refinement step. Throws NumericalError when
// the matrix is not positive definite even after regularization.
Vector solve_small_spd(const Matrix& a, const Vector& b, double reg = 0.0);

}  // namespace dpcp
