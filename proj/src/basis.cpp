#include "gradmrf/basis.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace gradmrf {

bool is_self_conjugate(Shape3 shape, int row, int col) {
    return wrap_index(-row, shape.h) == row && wrap_index(-col, shape.w) == col;
}

TensorGrid basis_vector(Shape3 shape, int channel, int row, int col, BasisPhase phase) {
    if (channel < 0 || channel >= shape.c || row < 0 || row >= shape.h || col < 0 ||
        col >= shape.w)
        throw ShapeError("basis_vector: index out of range for shape " + shape.str());
    if (phase == BasisPhase::Sin && is_self_conjugate(shape, row, col))
        throw UndefinedPhaseError("basis_vector: sine phase undefined at self-conjugate bin (" +
                                  std::to_string(row) + "," + std::to_string(col) + ") on " +
                                  shape.str());
    TensorGrid v(shape);
    const double two_pi = 2.0 * std::numbers::pi;
    double norm2 = 0.0;
    for (int y = 0; y < shape.h; ++y)
        for (int x = 0; x < shape.w; ++x) {
            const double ang = two_pi * (static_cast<double>(row) * y / shape.h +
                                         static_cast<double>(col) * x / shape.w);
            const double val = phase == BasisPhase::Cos ? std::cos(ang) : std::sin(ang);
            v.at(channel, y, x) = val;
            norm2 += val * val;
        }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int y = 0; y < shape.h; ++y)
        for (int x = 0; x < shape.w; ++x) v.at(channel, y, x) *= inv;
    return v;
}

TensorGrid basis_vector(Shape3 shape, const BasisIndex& idx) {
    return basis_vector(shape, idx.channel, idx.row, idx.col, idx.phase);
}

namespace {

/// Spatial bins in enumeration order, duplicates (conjugate pairs) skipped.
/// Second value: whether the bin admits a sine phase.
std::vector<std::pair<std::pair<int, int>, bool>> canonical_bins(Shape3 shape) {
    std::vector<std::pair<std::pair<int, int>, bool>> bins;
    std::set<std::pair<int, int>> seen;
    for (int s = 0; s <= (shape.h - 1) + (shape.w - 1); ++s) {
        for (int r = std::min(s, shape.h - 1); r >= std::max(0, s - (shape.w - 1)); --r) {
            const int c = s - r;
            const std::pair<int, int> bin{r, c};
            const std::pair<int, int> conj{wrap_index(-r, shape.h), wrap_index(-c, shape.w)};
            if (seen.count(conj)) continue;  // cosine would duplicate an earlier vector
            seen.insert(bin);
            bins.push_back({bin, !is_self_conjugate(shape, r, c)});
        }
    }
    return bins;
}

}  // namespace

std::size_t basis_capacity(Shape3 shape, BasisKind kinds) {
    std::size_t per_channel = 0;
    for (const auto& [bin, has_sine] : canonical_bins(shape))
        per_channel += (kinds == BasisKind::CosineSine && has_sine) ? 2 : 1;
    return per_channel * static_cast<std::size_t>(shape.c);
}

BasisPlan plan_low_frequency(Shape3 shape, std::size_t count, BasisKind kinds) {
    const std::size_t cap = basis_capacity(shape, kinds);
    if (count > cap)
        throw std::invalid_argument("plan_low_frequency: requested " + std::to_string(count) +
                                    " vectors but shape " + shape.str() + " provides " +
                                    std::to_string(cap));
    BasisPlan plan{shape, kinds, {}};
    plan.order.reserve(count);
    for (const auto& [bin, has_sine] : canonical_bins(shape)) {
        for (int ch = 0; ch < shape.c && plan.order.size() < count; ++ch)
            plan.order.push_back({ch, bin.first, bin.second, BasisPhase::Cos});
        if (kinds == BasisKind::CosineSine && has_sine)
            for (int ch = 0; ch < shape.c && plan.order.size() < count; ++ch)
                plan.order.push_back({ch, bin.first, bin.second, BasisPhase::Sin});
        if (plan.order.size() >= count) break;
    }
    return plan;
}

std::vector<TensorGrid> low_frequency_sequence(Shape3 shape, std::size_t count, BasisKind kinds) {
    const BasisPlan plan = plan_low_frequency(shape, count, kinds);
    std::vector<TensorGrid> out;
    out.reserve(plan.order.size());
    for (const auto& idx : plan.order) out.push_back(basis_vector(shape, idx));
    return out;
}

std::string to_string(BasisPhase phase) { return phase == BasisPhase::Cos ? "cos" : "sin"; }

}  // namespace gradmrf
