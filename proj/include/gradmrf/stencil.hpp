#pragma once

#include <string>
#include <vector>

#include "gradmrf/tensor.hpp"

namespace gradmrf {

/// Signed grid offset (dchannel, dheight, dwidth).
struct Offset3 {
    int dc{0};
    int dh{0};
    int dw{0};
    bool operator==(const Offset3&) const = default;
    Offset3 negated() const { return {-dc, -dh, -dw}; }
    std::string str() const;
};

/// Symmetric precision stencil: a set of signed offsets, each tied to one of
/// `param_count` shared parameters. Offset (0,0,0) must be present and the
/// offset set must be closed under negation with matching parameter indices,
/// which makes Lambda(theta) symmetric with real eigenvalues.
class StencilSpec {
public:
    struct Entry {
        Offset3 offset;
        int param;
    };

    StencilSpec(std::string name, std::vector<Entry> entries, int param_count);

    const std::string& name() const { return name_; }
    const std::vector<Entry>& entries() const { return entries_; }
    int param_count() const { return param_count_; }

    /// Largest |offset| per axis, for shape-compatibility checks.
    Offset3 max_abs_offset() const;

    // Stencil topologies used by the model presets and test fixtures.
    static StencilSpec identity();        // diagonal alpha only
    static StencilSpec four_neighbor();   // alpha, beta (2-D cross)
    static StencilSpec eight_neighbor();  // alpha, beta, gamma (adds 2-D diagonals)
    static StencilSpec three_channel();   // alpha, beta, gamma (cross-channel), kappa (diagonals)
    static StencilSpec ring2();           // three_channel + nu on the 12 distance-2 offsets
    static StencilSpec by_name(const std::string& name);

private:
    std::string name_;
    std::vector<Entry> entries_;
    int param_count_;
};

using ParamVector = std::vector<double>;

/// A stencil plus fitted parameters and the attack hyperparameters that were
/// published alongside them.
struct ModelPreset {
    StencilSpec spec;
    ParamVector theta;
    double sigma2;      // observation noise variance for the posterior
    double delta1;      // perturbation scale for attack directions
    double fit_delta;   // finite-difference step used when fitting
};

/// Named presets: "identity", "mnist", "vgg16", "resnet50", "inception-v3".
ModelPreset preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace gradmrf
