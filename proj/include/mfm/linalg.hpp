#pragma once

#include "mfm/array.hpp"

namespace mfm {

// Principal square root of a symmetric PSD matrix via eigendecomposition,
// clamping small negative eigenvalues at zero. Inputs are symmetrized
// internally; an eigenvalue below -1e-6 raises NotPsdError.
DenseArray matrix_sqrt_psd(const DenseArray& a);

// Column means of an [n, d] matrix.
DenseArray column_means(const DenseArray& x);

// Unbiased (n-1) covariance of an [n, d] matrix; requires n >= 2.
DenseArray covariance(const DenseArray& x);

double trace(const DenseArray& a);
DenseArray matmul2(const DenseArray& a, const DenseArray& b);  // plain [m,k]x[k,n]
double frobenius_norm(const DenseArray& a);

}  // namespace mfm
