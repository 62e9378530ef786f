#pragma once

#include <memory>
#include <vector>

#include "gradmrf/gmrf.hpp"
#include "gradmrf/tensor.hpp"

namespace gradmrf {

/// Accumulated linear observations of an unknown gradient g ~ N(0, Lambda^{-1}):
/// rows (x'-x, L(x')-L(x)) with noise variance sigma2. Maintains
/// U = Lambda^{-1} X^T and a Cholesky factorization of the m x m inner matrix
/// sigma2*I + X Lambda^{-1} X^T, extended one row per observation (never
/// refactored from scratch except as a rounding fallback, see below).
///
/// Single writer: add_observation mutates; the query methods are const and
/// may run concurrently with each other but not with a writer.
class ObservationSet {
public:
    ObservationSet(std::shared_ptr<const GmrfModel> model, double base_loss, double sigma2);

    /// One FFT solve + O(m*N) inner products + O(m^2) factor extension.
    /// Non-finite loss differences are rejected.
    void add_observation(const TensorGrid& direction, double loss_diff);

    /// Posterior mean ghat = (Lambda + X^T X/sigma2)^{-1} X^T L / sigma2,
    /// computed in the equivalent form U * (inner^{-1} L).
    TensorGrid posterior_mean() const;

    /// Posterior covariance action (Lambda + X^T X/sigma2)^{-1} v via
    /// Woodbury: Lambda^{-1} v - U inner^{-1} (X Lambda^{-1} v).
    TensorGrid posterior_covariance_apply(const TensorGrid& v) const;

    int count() const { return static_cast<int>(directions_.size()); }
    const GmrfModel& model() const { return *model_; }
    double sigma2() const { return sigma2_; }
    double base_loss() const { return base_loss_; }
    const std::vector<TensorGrid>& directions() const { return directions_; }
    const std::vector<TensorGrid>& u_columns() const { return u_cols_; }
    const std::vector<double>& loss_diffs() const { return loss_diffs_; }
    /// Row-major m x m inner matrix (for tests and diagnostics).
    const std::vector<double>& inner_matrix() const { return inner_; }
    bool was_refactored() const { return refactored_; }

private:
    std::vector<double> solve_inner(const std::vector<double>& rhs) const;
    void refactor_with_ridge();

    std::shared_ptr<const GmrfModel> model_;
    double base_loss_;
    double sigma2_;
    std::vector<TensorGrid> directions_;
    std::vector<TensorGrid> u_cols_;
    std::vector<double> loss_diffs_;
    std::vector<double> inner_;  // dense symmetric, row-major m x m
    std::vector<double> chol_;   // lower-triangular factor, row-major m x m
    bool refactored_{false};
};

}  // namespace gradmrf
