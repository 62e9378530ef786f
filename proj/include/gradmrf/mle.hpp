#pragma once

#include <cstdint>
#include <vector>

#include "gradmrf/oracle.hpp"
#include "gradmrf/stencil.hpp"
#include "gradmrf/tensor.hpp"

namespace gradmrf {

/// RDSA-style gradient estimates g^{(ij)} collected from a loss oracle:
/// m source images, n shared Gaussian directions each, finite-difference
/// step delta.
struct GradientSampleSet {
    Shape3 shape{};
    std::vector<TensorGrid> samples;
    int source_count{0};
    int directions_per_source{0};
    double delta{0.0};
    int rejected{0};  // non-finite losses dropped, with a diagnostic each
    std::vector<std::string> diagnostics;
};

/// g^{(ij)} = u^{(j)} * (L(x^{(i)} + delta*u^{(j)}, y^{(i)}) - L(x^{(i)}, y^{(i)})) / delta.
/// The n directions are drawn once and shared across images; exactly
/// m*(n+1) oracle queries are consumed (one base loss per image).
GradientSampleSet collect_samples(LossOracle& oracle, const std::vector<TensorGrid>& images,
                                  const std::vector<int>& labels, int directions, double delta,
                                  std::uint64_t seed);

/// Wrap externally produced gradient estimates (e.g. prior draws) as a set.
GradientSampleSet wrap_samples(std::vector<TensorGrid> samples, int source_count,
                               int directions_per_source, double delta);

/// f(theta) = tr(S * Lambda(theta)) - logdet Lambda(theta) with
/// S = (1/M) sum_i g_i g_i^T, evaluated as (1/M) sum_i <g_i, Lambda g_i>
/// without materializing S. Throws NotPositiveDefiniteError off the cone.
double nll_objective(const GradientSampleSet& samples, const StencilSpec& spec,
                     const ParamVector& theta);

struct FitOptions {
    double tol{1e-10};          // stop when newton decrement^2 / 2 < tol
    int max_iter{100};
    double backtrack{0.5};
    double armijo{1e-4};
};

struct FitReport {
    ParamVector theta;
    std::vector<double> objective_trace;     // f at theta_0 .. theta_k, non-increasing
    std::vector<double> newton_decrements;   // lambda^2 per iteration
    int iterations{0};
    bool converged{false};
    bool hessian_regularized{false};
};

/// Damped Newton minimization of the Gaussian negative log-likelihood with
/// analytic gradient and Hessian; line search never leaves the PD cone.
FitReport fit(const GradientSampleSet& samples, const StencilSpec& spec,
              const FitOptions& opts = {});

void save_fit_report(const std::string& path, const FitReport& report, const StencilSpec& spec);

namespace detail {
/// Per-parameter exact data coefficients c_p = tr(S B_p).
std::vector<double> data_coefficients(const GradientSampleSet& samples, const StencilSpec& spec);
/// Indicator eigenvalue grids b_p(omega) for Lambda(theta) = sum_p theta_p B_p.
std::vector<TensorGrid> basis_symbol_grids(const StencilSpec& spec, Shape3 shape);
}  // namespace detail

}  // namespace gradmrf
