#include "gradmrf/autocorr.hpp"

namespace gradmrf {

std::vector<std::vector<double>> autocorrelation(const std::vector<TensorGrid>& gradients,
                                                 int window, AutocorrMode mode) {
    if (gradients.empty()) throw std::invalid_argument("autocorrelation: no gradients");
    const Shape3 shape = gradients.front().shape();
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("autocorrelation: window must be odd and >= 1");
    if (window > shape.h || window > shape.w)
        throw std::invalid_argument("autocorrelation: window exceeds grid extent");
    for (const auto& g : gradients)
        if (!(g.shape() == shape)) throw ShapeError("autocorrelation: inhomogeneous shapes");

    const int radius = window / 2;
    std::vector<std::vector<double>> maps(
        static_cast<std::size_t>(shape.c),
        std::vector<double>(static_cast<std::size_t>(window) * window, 0.0));
    std::vector<double> denom(static_cast<std::size_t>(shape.c), 0.0);

    for (const auto& g : gradients)
        for (int ch = 0; ch < shape.c; ++ch)
            for (int y = 0; y < shape.h; ++y)
                for (int x = 0; x < shape.w; ++x) denom[static_cast<std::size_t>(ch)] += g.at(ch, y, x) * g.at(ch, y, x);

    for (int ch = 0; ch < shape.c; ++ch)
        if (denom[static_cast<std::size_t>(ch)] == 0.0)
            throw std::invalid_argument("autocorrelation: all-zero gradients on channel " +
                                        std::to_string(ch));

    const long long ngrad = static_cast<long long>(gradients.size());
#pragma omp parallel
    {
        std::vector<std::vector<double>> local(
            static_cast<std::size_t>(shape.c),
            std::vector<double>(static_cast<std::size_t>(window) * window, 0.0));
#pragma omp for schedule(static)
        for (long long gi = 0; gi < ngrad; ++gi) {
            const TensorGrid& g = gradients[static_cast<std::size_t>(gi)];
            for (int ch = 0; ch < shape.c; ++ch)
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        double acc = 0.0;
                        if (mode == AutocorrMode::Circular) {
                            for (int y = 0; y < shape.h; ++y)
                                for (int x = 0; x < shape.w; ++x)
                                    acc += g.at(ch, y, x) * g.at(ch, wrap_index(y + dy, shape.h),
                                                                 wrap_index(x + dx, shape.w));
                        } else {
                            const int y0 = std::max(0, -dy), y1 = std::min(shape.h, shape.h - dy);
                            const int x0 = std::max(0, -dx), x1 = std::min(shape.w, shape.w - dx);
                            for (int y = y0; y < y1; ++y)
                                for (int x = x0; x < x1; ++x)
                                    acc += g.at(ch, y, x) * g.at(ch, y + dy, x + dx);
                        }
                        local[static_cast<std::size_t>(ch)]
                             [static_cast<std::size_t>(dy + radius) * window + (dx + radius)] +=
                            acc;
                    }
        }
#pragma omp critical
        for (int ch = 0; ch < shape.c; ++ch)
            for (std::size_t k = 0; k < local[static_cast<std::size_t>(ch)].size(); ++k)
                maps[static_cast<std::size_t>(ch)][k] += local[static_cast<std::size_t>(ch)][k];
    }

    for (int ch = 0; ch < shape.c; ++ch)
        for (double& v : maps[static_cast<std::size_t>(ch)]) v /= denom[static_cast<std::size_t>(ch)];
    return maps;
}

}  // namespace gradmrf
