#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradmrf/tensor.hpp"

namespace gradmrf {

/// Black-box scalar-loss interface with query accounting. Every query()
/// bumps the counter by exactly one; predict() (the classifier's decision,
/// when one exists) is deliberately not counted.
class LossOracle {
public:
    virtual ~LossOracle() = default;

    double query(const TensorGrid& x, int label) {
        counter_.fetch_add(1, std::memory_order_relaxed);
        return evaluate(x, label);
    }

    virtual std::optional<int> predict(const TensorGrid&) const { return std::nullopt; }
    virtual bool concurrent_safe() const { return false; }

    std::uint64_t queries_used() const { return counter_.load(std::memory_order_relaxed); }
    void reset_queries() { counter_.store(0, std::memory_order_relaxed); }

protected:
    virtual double evaluate(const TensorGrid& x, int label) const = 0;

private:
    std::atomic<std::uint64_t> counter_{0};
};

/// L(x) = L0 + <g*, x - x0> + (q/2) |x - x0|^2 with known gradient g* at x0.
/// q = 0 gives an exactly linear loss (zero finite-difference bias).
class SyntheticOracle final : public LossOracle {
public:
    SyntheticOracle(TensorGrid anchor, TensorGrid true_gradient, double base_loss = 0.0,
                    double curvature = 0.0);

    const TensorGrid& anchor() const { return anchor_; }
    const TensorGrid& true_gradient() const { return grad_; }
    bool concurrent_safe() const override { return true; }

protected:
    double evaluate(const TensorGrid& x, int label) const override;

private:
    TensorGrid anchor_;
    TensorGrid grad_;
    double base_loss_;
    double curvature_;
};

/// Labeled image set in [0,1] with train/test split tags.
struct Dataset {
    Shape3 shape{};
    int classes{0};
    std::vector<TensorGrid> images;
    std::vector<int> labels;
    std::vector<std::uint8_t> is_test;

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
    std::size_t size() const { return images.size(); }
};

/// Reproducible desk-scale data: "blobs" (class-dependent smooth bumps) or
/// "bars" (horizontal vs vertical stripes), pixel range clipped to [0,1].
Dataset make_synthetic_dataset(const std::string& kind, std::size_t size, Shape3 shape,
                               std::uint64_t seed);

void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// Softmax regression (hidden == 0) or one-hidden-layer tanh network with
/// cross-entropy loss and an analytic input gradient.
class ToyClassifier {
public:
    Shape3 input_shape{};
    int hidden{0};
    int classes{0};
    // row-major weights: w_hidden (hidden x N), w_out (classes x hidden or classes x N)
    std::vector<double> w_hidden, b_hidden, w_out, b_out;

    std::vector<double> logits(const TensorGrid& x) const;
    double loss(const TensorGrid& x, int label) const;
    int predict(const TensorGrid& x) const;
    TensorGrid input_gradient(const TensorGrid& x, int label) const;

    void save(const std::string& dir) const;
    static ToyClassifier load(const std::string& dir);
};

TensorGrid white_box_gradient(const ToyClassifier& clf, const TensorGrid& x, int label);

struct TrainOptions {
    int hidden{32};         // 0 = softmax regression
    int epochs{200};
    double learning_rate{0.5};
    double init_scale{0.05};
};

struct TrainResult {
    ToyClassifier classifier;
    double train_accuracy{0.0};
    double test_accuracy{0.0};
    std::vector<double> loss_trace;
};

/// Deterministic full-batch gradient descent. Throws on divergence (NaN loss).
TrainResult train_toy(const Dataset& data, const TrainOptions& opts, std::uint64_t seed);

/// Counts loss queries against a trained classifier; decisions via predict().
class ClassifierOracle final : public LossOracle {
public:
    explicit ClassifierOracle(const ToyClassifier& clf) : clf_(clf) {}
    std::optional<int> predict(const TensorGrid& x) const override { return clf_.predict(x); }
    bool concurrent_safe() const override { return true; }

protected:
    double evaluate(const TensorGrid& x, int label) const override { return clf_.loss(x, label); }

private:
    const ToyClassifier& clf_;
};

}  // namespace gradmrf
