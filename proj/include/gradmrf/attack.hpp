#pragma once

#include <cstdint>
#include <memory>

#include "gradmrf/basis.hpp"
#include "gradmrf/gmrf.hpp"
#include "gradmrf/oracle.hpp"
#include "gradmrf/tensor.hpp"

namespace gradmrf {

enum class DirectionSource { FftBasis, Gaussian };

struct AttackConfig {
    double epsilon{0.05};              // l_inf perturbation bound (pixel units)
    int budget{20};                    // m perturbation queries
    double delta1{0.1};                // perturbation scale for directions
    double sigma2{1.0};                // observation noise variance
    DirectionSource directions{DirectionSource::FftBasis};
    BasisKind basis_kind{BasisKind::CosineOnly};
    std::shared_ptr<const GmrfModel> model;  // GMRF prior, or an identity model
    double clip_lo{0.0};
    double clip_hi{1.0};
    std::uint64_t rng_seed{0};         // used for Gaussian directions

    void validate() const;
};

struct GradientDiagnostics {
    bool available{false};
    double cosine{0.0};           // cosine similarity to the white-box gradient
    double mse_normalized{0.0};   // |g/|g| - ghat/|ghat||^2 / N
};

struct AttackOutcome {
    bool success{false};
    bool degenerate{false};       // estimated gradient was exactly zero
    std::uint64_t queries_used{0};
    TensorGrid adversarial;
    TensorGrid estimated_gradient;
    GradientDiagnostics diagnostics;
};

/// Cosine similarity and normalized-vector MSE between a reference gradient
/// and an estimate.
GradientDiagnostics gradient_diagnostics(const TensorGrid& reference, const TensorGrid& estimate);

/// One-step black-box FGSM: perturb x along `budget` directions scaled by
/// delta1, infer the posterior-mean gradient under cfg.model, and take
/// x + epsilon * sign(ghat) clipped to the input box. Consumes exactly
/// budget+1 loss queries; the final success decision is not counted.
AttackOutcome bb_fgsm(LossOracle& oracle, const TensorGrid& x, int label,
                      const AttackConfig& cfg);

/// RDSA estimate (mean of directional finite differences along Gaussian
/// directions) followed by the same FGSM step; budget+1 queries.
AttackOutcome rdsa_fgsm(LossOracle& oracle, const TensorGrid& x, int label, double epsilon,
                        int budget, double delta, std::uint64_t seed, double clip_lo = 0.0,
                        double clip_hi = 1.0);

/// White-box FGSM from the analytic gradient; zero oracle queries.
AttackOutcome white_box_fgsm(const ToyClassifier& clf, const TensorGrid& x, int label,
                             double epsilon, double clip_lo = 0.0, double clip_hi = 1.0);

/// True iff the classifier's decision at `adversarial` differs from `label`.
bool evaluate_success(const ToyClassifier& clf, const TensorGrid& adversarial, int label);

/// sign with sign(0) = 0, applied elementwise in the FGSM step.
double sign0(double v);

}  // namespace gradmrf
