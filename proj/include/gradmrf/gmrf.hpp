#pragma once

#include <cstdint>
#include <memory>

#include "gradmrf/stencil.hpp"
#include "gradmrf/tensor.hpp"

namespace gradmrf {

/// Place theta_{p(o)} at (o mod shape) for every stencil offset, zeros
/// elsewhere. Throws AmbiguityError if two distinct offsets wrap onto the
/// same cell (the circulant would no longer be well defined by the stencil).
TensorGrid embed_stencil(const StencilSpec& spec, const ParamVector& theta, Shape3 shape);

/// Eigenvalue grid of the circulant Lambda(theta): the DFT of the embedded
/// stencil, evaluated directly as sum_o theta_{p(o)} cos(2*pi*<o, omega/shape>)
/// which is exactly real for a symmetric stencil.
TensorGrid symbol_grid(const StencilSpec& spec, const ParamVector& theta, Shape3 shape);

/// Lambda(theta) * vec(t): the circular stencil convolution. Exact (no FFT).
TensorGrid circular_convolve(const TensorGrid& t, const StencilSpec& spec,
                             const ParamVector& theta);

/// Relative positive-definiteness test: min d(omega) > 1e-12 * max d(omega).
bool is_feasible(const StencilSpec& spec, const ParamVector& theta, Shape3 shape);
bool symbol_is_feasible(const TensorGrid& eigs);

/// Immutable parameterized circulant precision operator on a fixed grid:
/// eigenvalues, log-determinant, quadratic forms, inverse application, and
/// prior sampling. All methods are read-only and safe to call concurrently.
class GmrfModel {
public:
    /// Validates offsets against the shape (including wrap collisions) and
    /// requires a positive-definite symbol; throws otherwise.
    static GmrfModel build(StencilSpec spec, ParamVector theta, Shape3 shape);
    static std::shared_ptr<const GmrfModel> build_shared(StencilSpec spec, ParamVector theta,
                                                         Shape3 shape);

    const StencilSpec& spec() const { return spec_; }
    const ParamVector& theta() const { return theta_; }
    const Shape3& shape() const { return shape_; }
    const TensorGrid& eigenvalues() const { return eigs_; }

    /// sum_omega log d(omega).
    double logdet() const;

    /// Lambda * v via the stencil convolution.
    TensorGrid apply(const TensorGrid& v) const;

    /// Lambda^{-1} * v via fft3 -> divide by eigenvalues -> inverse fft3.
    TensorGrid solve(const TensorGrid& v) const;

    /// Draw from N(0, Lambda^{-1}): real white noise shaped by d^{-1/2} in the
    /// Fourier domain. Deterministic for a fixed seed.
    TensorGrid sample_prior(std::uint64_t seed) const;

private:
    GmrfModel(StencilSpec spec, ParamVector theta, Shape3 shape, TensorGrid eigs);

    StencilSpec spec_;
    ParamVector theta_;
    Shape3 shape_;
    TensorGrid eigs_;
};

}  // namespace gradmrf
