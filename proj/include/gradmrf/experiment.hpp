#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradmrf/attack.hpp"
#include "gradmrf/kvfile.hpp"
#include "gradmrf/mle.hpp"
#include "gradmrf/oracle.hpp"

namespace gradmrf {

/// Everything a batch run needs, loadable from a key-value config file with
/// CLI overrides, hashable for the run manifest.
struct ExperimentConfig {
    std::uint64_t seed{1234};
    std::string out_dir{"out"};

    // dataset: a directory produced by save_dataset, or a synthetic spec
    std::string dataset_dir;
    std::string dataset_kind{"bars"};
    int dataset_size{800};
    Shape3 shape{1, 16, 16};

    // toy classifier: a directory produced by ToyClassifier::save, or training options
    std::string classifier_dir;
    int hidden{32};
    int epochs{200};
    double learning_rate{0.5};

    // GMRF fitting (the designated fitting images are the last `fit_images`
    // of the test split, held out from the attack pool)
    std::string model_file;
    std::string stencil{"eight-neighbor"};
    int fit_images{10};
    int fit_directions{10};
    double fit_delta{0.1};

    // attack grid
    std::vector<double> epsilons{0.1};
    std::vector<int> budgets{20, 50, 100};
    std::vector<std::string> variants{"gmrf", "identity", "rdsa", "white-box"};
    std::string direction_source{"fft-basis"};  // or "gaussian"
    std::string basis_kind{"cos"};              // or "cos+sin"
    double sigma2{0.05};
    double delta1{0.15};
    int max_images{0};  // 0 = every eligible pool image

    static ExperimentConfig from_kv(const KvFile& kv);
    KvFile to_kv() const;
    void validate() const;
};

struct MetricsRow {
    std::string attack;
    double epsilon{0.0};
    int budget{0};
    double success_rate{0.0};
    double avg_queries_successful{0.0};  // over successful attacks only
    double mean_cosine{0.0};             // vs the white-box gradient
    double mean_mse{0.0};                // of l2-normalized gradients
    int image_count{0};
};

struct MetricsTable {
    std::vector<MetricsRow> rows;
    std::string to_csv() const;
};

/// Writes manifest.kv (command, seed, config hash, library version) into dir.
void write_manifest(const std::string& dir, const std::string& command,
                    const ExperimentConfig& cfg);

// Subcommand drivers. Each writes its outputs under cfg.out_dir and returns
// the process exit code contract: 0 full success, 2 partial per-image
// failures (config errors surface as exceptions and map to exit code 1).

struct FitRunResult {
    FitReport report;
    std::uint64_t fit_queries{0};
    double amortized_queries_per_image{0.0};
    int attack_pool_size{0};
};
FitRunResult run_fit(const ExperimentConfig& cfg);

struct AttackRunResult {
    MetricsTable metrics;
    int pool_size{0};
    int partial_failures{0};
    std::uint64_t fit_queries{0};
    double amortized_queries_per_image{0.0};
};
AttackRunResult run_attack(const ExperimentConfig& cfg);

struct GradCheckResult {
    int image_count{0};
    double mean_cosine{0.0};
    double mean_mse{0.0};
};
GradCheckResult run_gradcheck(const ExperimentConfig& cfg, int budget);

void run_autocorr(const std::vector<TensorGrid>& gradients, int window, bool circular,
                  const std::string& out_path);

// Shared plumbing for the drivers and the CLI.
Dataset obtain_dataset(const ExperimentConfig& cfg);
TrainResult obtain_classifier(const ExperimentConfig& cfg, const Dataset& ds);

}  // namespace gradmrf
