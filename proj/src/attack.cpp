#include "gradmrf/attack.hpp"

#include <algorithm>
#include <cmath>

#include "gradmrf/posterior.hpp"
#include "gradmrf/rng.hpp"

namespace gradmrf {

void AttackConfig::validate() const {
    // epsilon == 0 is the degenerate bound (adversarial == x), still allowed
    if (epsilon < 0.0) throw std::invalid_argument("AttackConfig: epsilon must be >= 0");
    if (budget < 1) throw std::invalid_argument("AttackConfig: budget must be >= 1");
    if (!(delta1 > 0.0)) throw std::invalid_argument("AttackConfig: delta1 must be > 0");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("AttackConfig: sigma2 must be > 0");
    if (!model) throw std::invalid_argument("AttackConfig: model is required");
    if (!(clip_lo < clip_hi)) throw std::invalid_argument("AttackConfig: empty clip range");
}

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

GradientDiagnostics gradient_diagnostics(const TensorGrid& reference,
                                         const TensorGrid& estimate) {
    GradientDiagnostics d;
    const double rn = reference.norm();
    const double en = estimate.norm();
    if (rn == 0.0 || en == 0.0) return d;
    d.available = true;
    d.cosine = reference.dot(estimate) / (rn * en);
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double diff = reference[i] / rn - estimate[i] / en;
        acc += diff * diff;
    }
    d.mse_normalized = acc / static_cast<double>(reference.size());
    return d;
}

namespace {

TensorGrid fgsm_step(const TensorGrid& x, const TensorGrid& gradient, double epsilon,
                     double clip_lo, double clip_hi) {
    TensorGrid adv = x;
    for (std::size_t i = 0; i < adv.size(); ++i)
        adv[i] = std::clamp(x[i] + epsilon * sign0(gradient[i]), clip_lo, clip_hi);
    return adv;
}

bool decide_success(const LossOracle& oracle, const TensorGrid& adversarial, int label) {
    // verification decision, deliberately outside the query budget
    const std::optional<int> decision = oracle.predict(adversarial);
    return decision.has_value() && *decision != label;
}

std::vector<TensorGrid> gaussian_directions(Shape3 shape, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TensorGrid> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        TensorGrid z(shape);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] = rng.normal();
        dirs.push_back(std::move(z));
    }
    return dirs;
}

}  // namespace

AttackOutcome bb_fgsm(LossOracle& oracle, const TensorGrid& x, int label,
                      const AttackConfig& cfg) {
    cfg.validate();
    if (!(x.shape() == cfg.model->shape()))
        throw ShapeError("bb_fgsm: input shape " + x.shape().str() + " vs model shape " +
                         cfg.model->shape().str());

    const std::uint64_t before = oracle.queries_used();
    const double base = oracle.query(x, label);

    std::vector<TensorGrid> directions =
        cfg.directions == DirectionSource::FftBasis
            ? low_frequency_sequence(x.shape(), static_cast<std::size_t>(cfg.budget),
                                     cfg.basis_kind)
            : gaussian_directions(x.shape(), cfg.budget, cfg.rng_seed);

    ObservationSet obs(cfg.model, base, cfg.sigma2);
    for (auto& z : directions) {
        z *= cfg.delta1;
        TensorGrid perturbed = x;
        perturbed += z;
        const double shifted = oracle.query(perturbed, label);
        obs.add_observation(z, shifted - base);
    }

    AttackOutcome out;
    out.estimated_gradient = obs.posterior_mean();
    out.queries_used = oracle.queries_used() - before;
    if (out.estimated_gradient.linf_norm() == 0.0) {
        out.degenerate = true;
        out.adversarial = x;
    } else {
        out.adversarial = fgsm_step(x, out.estimated_gradient, cfg.epsilon, cfg.clip_lo,
                                    cfg.clip_hi);
    }
    out.success = decide_success(oracle, out.adversarial, label);
    return out;
}

AttackOutcome rdsa_fgsm(LossOracle& oracle, const TensorGrid& x, int label, double epsilon,
                        int budget, double delta, std::uint64_t seed, double clip_lo,
                        double clip_hi) {
    if (budget < 1) throw std::invalid_argument("rdsa_fgsm: budget must be >= 1");
    if (!(delta > 0.0)) throw std::invalid_argument("rdsa_fgsm: delta must be > 0");

    const std::uint64_t before = oracle.queries_used();
    const double base = oracle.query(x, label);

    TensorGrid estimate(x.shape());
    for (const auto& z : gaussian_directions(x.shape(), budget, seed)) {
        TensorGrid perturbed = x;
        perturbed.axpy(delta, z);
        const double shifted = oracle.query(perturbed, label);
        estimate.axpy((shifted - base) / (delta * budget), z);
    }

    AttackOutcome out;
    out.estimated_gradient = std::move(estimate);
    out.queries_used = oracle.queries_used() - before;
    if (out.estimated_gradient.linf_norm() == 0.0) {
        out.degenerate = true;
        out.adversarial = x;
    } else {
        out.adversarial = fgsm_step(x, out.estimated_gradient, epsilon, clip_lo, clip_hi);
    }
    out.success = decide_success(oracle, out.adversarial, label);
    return out;
}

AttackOutcome white_box_fgsm(const ToyClassifier& clf, const TensorGrid& x, int label,
                             double epsilon, double clip_lo, double clip_hi) {
    AttackOutcome out;
    out.estimated_gradient = clf.input_gradient(x, label);
    out.queries_used = 0;
    out.adversarial = fgsm_step(x, out.estimated_gradient, epsilon, clip_lo, clip_hi);
    out.success = evaluate_success(clf, out.adversarial, label);
    return out;
}

bool evaluate_success(const ToyClassifier& clf, const TensorGrid& adversarial, int label) {
    return clf.predict(adversarial) != label;
}

}  // namespace gradmrf
