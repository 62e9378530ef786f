#pragma once

#include <vector>

#include "gradmrf/tensor.hpp"

namespace gradmrf {

enum class AutocorrMode { ValidRegion, Circular };

/// Per-channel spatial autocorrelation of a gradient collection over a
/// window x window grid of offsets:
///   r(o) = sum_images sum_pixels g(p) * g(p+o) / sum_images sum_pixels g(p)^2
/// so r(0,0) == 1 by construction. ValidRegion sums only in-bounds pixel
/// pairs (real images are not periodic); Circular wraps, matching a
/// GMRF-sampled fixture. `window` must be odd and <= min(h, w).
///
/// Result: maps[channel][(dy + R) * window + (dx + R)] with R = window/2.
std::vector<std::vector<double>> autocorrelation(const std::vector<TensorGrid>& gradients,
                                                 int window,
                                                 AutocorrMode mode = AutocorrMode::ValidRegion);

}  // namespace gradmrf
