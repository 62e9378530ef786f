#include "gradmrf/posterior.hpp"

#include <cmath>

namespace gradmrf {

ObservationSet::ObservationSet(std::shared_ptr<const GmrfModel> model, double base_loss,
                               double sigma2)
    : model_(std::move(model)), base_loss_(base_loss), sigma2_(sigma2) {
    if (!model_) throw std::invalid_argument("ObservationSet: null model");
    if (!(sigma2_ > 0.0)) throw std::invalid_argument("ObservationSet: sigma2 must be > 0");
}

void ObservationSet::add_observation(const TensorGrid& direction, double loss_diff) {
    if (!(direction.shape() == model_->shape()))
        throw ShapeError("add_observation: direction shape " + direction.shape().str() +
                         " does not match model shape " + model_->shape().str());
    if (!std::isfinite(loss_diff))
        throw std::invalid_argument("add_observation: non-finite loss difference");

    TensorGrid u = model_->solve(direction);
    const std::size_t m = directions_.size();

    // extend inner = sigma2*I + X Lambda^{-1} X^T by one row/column
    std::vector<double> new_row(m + 1);
    for (std::size_t i = 0; i < m; ++i) new_row[i] = directions_[i].dot(u);
    new_row[m] = direction.dot(u) + sigma2_;

    std::vector<double> grown((m + 1) * (m + 1), 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) grown[i * (m + 1) + j] = inner_[i * m + j];
    for (std::size_t i = 0; i <= m; ++i) {
        grown[i * (m + 1) + m] = new_row[i];
        grown[m * (m + 1) + i] = new_row[i];
    }
    inner_ = std::move(grown);

    // extend the Cholesky factor: solve L w = k, new diagonal sqrt(d - |w|^2)
    std::vector<double> grown_chol((m + 1) * (m + 1), 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j) grown_chol[i * (m + 1) + j] = chol_[i * m + j];
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = new_row[i];
        for (std::size_t k = 0; k < i; ++k) s -= grown_chol[i * (m + 1) + k] * w[k];
        w[i] = s / grown_chol[i * (m + 1) + i];
    }
    double diag = new_row[m];
    for (double v : w) diag -= v * v;

    directions_.push_back(direction);
    u_cols_.push_back(std::move(u));
    loss_diffs_.push_back(loss_diff);

    if (diag > 0.0 && std::isfinite(diag)) {
        for (std::size_t i = 0; i < m; ++i) grown_chol[m * (m + 1) + i] = w[i];
        grown_chol[m * (m + 1) + m] = std::sqrt(diag);
        chol_ = std::move(grown_chol);
    } else {
        // rounding pushed the extension out of PD; one full refactor with a
        // ridge of 1e-12 * trace restores it without changing semantics
        // beyond test tolerance
        refactor_with_ridge();
    }
}

void ObservationSet::refactor_with_ridge() {
    const std::size_t m = directions_.size();
    double trace = 0.0;
    for (std::size_t i = 0; i < m; ++i) trace += inner_[i * m + i];
    const double ridge = 1e-12 * trace;

    std::vector<double> a = inner_;
    for (std::size_t i = 0; i < m; ++i) a[i * m + i] += ridge;
    chol_.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * m + j];
            for (std::size_t k = 0; k < j; ++k) s -= chol_[i * m + k] * chol_[j * m + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s))
                    throw NumericalConditioningError(
                        "ObservationSet: inner matrix lost positive definiteness even with ridge",
                        trace / ridge);
                chol_[i * m + i] = std::sqrt(s);
            } else {
                chol_[i * m + j] = s / chol_[j * m + j];
            }
        }
    }
    refactored_ = true;
}

std::vector<double> ObservationSet::solve_inner(const std::vector<double>& rhs) const {
    const std::size_t m = directions_.size();
    double diag_min = chol_[0], diag_max = chol_[0];
    for (std::size_t i = 0; i < m; ++i) {
        diag_min = std::min(diag_min, chol_[i * m + i]);
        diag_max = std::max(diag_max, chol_[i * m + i]);
    }
    if (!(diag_min > 0.0) || !std::isfinite(diag_max))
        throw NumericalConditioningError("ObservationSet: degenerate inner factorization",
                                         diag_max / std::max(diag_min, 1e-300));
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol_[i * m + k] * x[k];
        x[i] = s / chol_[i * m + i];
    }
    for (std::size_t ii = m; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < m; ++k) s -= chol_[k * m + ii] * x[k];
        x[ii] = s / chol_[ii * m + ii];
    }
    return x;
}

TensorGrid ObservationSet::posterior_mean() const {
    if (directions_.empty())
        throw std::invalid_argument("posterior_mean: at least one observation required");
    const std::vector<double> weights = solve_inner(loss_diffs_);
    TensorGrid out(model_->shape());
    for (std::size_t j = 0; j < u_cols_.size(); ++j) out.axpy(weights[j], u_cols_[j]);
    return out;
}

TensorGrid ObservationSet::posterior_covariance_apply(const TensorGrid& v) const {
    if (!(v.shape() == model_->shape()))
        throw ShapeError("posterior_covariance_apply: shape mismatch");
    TensorGrid t = model_->solve(v);
    if (directions_.empty()) return t;
    std::vector<double> q(directions_.size());
    for (std::size_t i = 0; i < directions_.size(); ++i) q[i] = directions_[i].dot(t);
    const std::vector<double> r = solve_inner(q);
    for (std::size_t j = 0; j < u_cols_.size(); ++j) t.axpy(-r[j], u_cols_[j]);
    return t;
}

}  // namespace gradmrf
