#pragma once

#include <string>
#include <vector>

#include "gradmrf/tensor.hpp"

namespace gradmrf {

enum class BasisPhase { Cos, Sin };
enum class BasisKind { CosineOnly, CosineSine };

/// One position in the enumeration: a spatial frequency bin on one channel.
struct BasisIndex {
    int channel;
    int row;   // frequency index along height
    int col;   // frequency index along width
    BasisPhase phase;
    bool operator==(const BasisIndex&) const = default;
};

/// A bin is self-conjugate when (-row mod h, -col mod w) == (row, col);
/// only the cosine phase exists there.
bool is_self_conjugate(Shape3 shape, int row, int col);

/// Real unit-norm vector supported on `channel` only: the inverse DFT of a
/// conjugate-symmetrized one-hot spectrum bin, i.e. cos/sin(2*pi*(row*y/h +
/// col*x/w)) on that channel, normalized to unit l2 norm.
TensorGrid basis_vector(Shape3 shape, int channel, int row, int col, BasisPhase phase);
TensorGrid basis_vector(Shape3 shape, const BasisIndex& idx);

/// Low-to-high-frequency enumeration of distinct basis vectors.
///
/// Order: anti-diagonals s = row + col ascending; within a diagonal start at
/// the row-beginning element (row = min(s, h-1), col = s - row) and step
/// (row-1, col+1). Bins whose conjugate was already visited are skipped
/// (their cosine duplicates an emitted vector). At each surviving bin the
/// cosine vector is emitted for every channel in turn, then (for CosineSine
/// plans, at non-self-conjugate bins) the sine vector for every channel.
struct BasisPlan {
    Shape3 shape;
    BasisKind kinds;
    std::vector<BasisIndex> order;
};

/// Number of distinct vectors available for the shape and kind.
std::size_t basis_capacity(Shape3 shape, BasisKind kinds);

BasisPlan plan_low_frequency(Shape3 shape, std::size_t count, BasisKind kinds);
std::vector<TensorGrid> low_frequency_sequence(Shape3 shape, std::size_t count, BasisKind kinds);

std::string to_string(BasisPhase phase);

}  // namespace gradmrf
