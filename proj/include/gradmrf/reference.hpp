#pragma once

#include <vector>

#include "gradmrf/stencil.hpp"
#include "gradmrf/tensor.hpp"

namespace gradmrf::ref {

// Serial reference implementations, independent of the FFT code paths.
// Tests use them as oracles; the benchmark compares against them. Dimensions
// are limited to small grids (dense cost is O(N^2) memory, O(N^3) solves).

/// Naive O(n^2)-per-axis DFT by direct summation over all three axes.
SpectrumGrid dft3_naive(const TensorGrid& t);

/// Row-major dense N x N matrix, N = shape.total().
using DenseMatrix = std::vector<double>;

/// Explicit circulant Lambda(theta): M[i*N + j] = theta_{p(o)} when
/// (j - i) wraps to stencil offset o, else 0.
DenseMatrix dense_lambda(const StencilSpec& spec, const ParamVector& theta, Shape3 shape);

/// Dense symmetric matrix-vector product.
TensorGrid dense_matvec(const DenseMatrix& m, const TensorGrid& v);

/// Eigenvalues of a dense symmetric matrix, ascending.
std::vector<double> dense_symmetric_eigenvalues(const DenseMatrix& m, std::size_t n);

/// log det of a dense SPD matrix (throws NotPositiveDefiniteError otherwise).
double dense_logdet(const DenseMatrix& m, std::size_t n);

/// Solve M x = b for dense SPD M.
TensorGrid dense_solve(const DenseMatrix& m, const TensorGrid& b);

/// Full inverse of a dense SPD matrix.
DenseMatrix dense_inverse(const DenseMatrix& m, std::size_t n);

/// Posterior mean (Lambda + X^T X / sigma2)^{-1} X^T L / sigma2 assembled
/// densely; directions are the rows of X.
TensorGrid dense_posterior_mean(const StencilSpec& spec, const ParamVector& theta, Shape3 shape,
                                const std::vector<TensorGrid>& directions,
                                const std::vector<double>& loss_diffs, double sigma2);

/// (Lambda + X^T X / sigma2)^{-1} v assembled densely.
TensorGrid dense_posterior_apply(const StencilSpec& spec, const ParamVector& theta, Shape3 shape,
                                 const std::vector<TensorGrid>& directions, double sigma2,
                                 const TensorGrid& v);

}  // namespace gradmrf::ref
