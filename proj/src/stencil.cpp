#include "gradmrf/stencil.hpp"

#include <algorithm>
#include <cstdlib>

namespace gradmrf {

std::string Offset3::str() const {
    return "(" + std::to_string(dc) + "," + std::to_string(dh) + "," + std::to_string(dw) + ")";
}

StencilSpec::StencilSpec(std::string name, std::vector<Entry> entries, int param_count)
    : name_(std::move(name)), entries_(std::move(entries)), param_count_(param_count) {
    if (param_count_ < 1)
        throw std::invalid_argument("StencilSpec: param_count must be >= 1");
    bool has_origin = false;
    for (const auto& e : entries_) {
        if (e.param < 0 || e.param >= param_count_)
            throw std::invalid_argument("StencilSpec: parameter index out of range for offset " +
                                        e.offset.str());
        if (e.offset == Offset3{0, 0, 0}) has_origin = true;
        // symmetry: -o must be present with the same parameter
        const Offset3 neg = e.offset.negated();
        bool found = false;
        for (const auto& f : entries_)
            if (f.offset == neg && f.param == e.param) { found = true; break; }
        if (!found)
            throw std::invalid_argument("StencilSpec: offset " + e.offset.str() +
                                        " lacks a symmetric partner with the same parameter");
    }
    if (!has_origin) throw std::invalid_argument("StencilSpec: offset (0,0,0) missing");
    for (std::size_t i = 0; i < entries_.size(); ++i)
        for (std::size_t j = i + 1; j < entries_.size(); ++j)
            if (entries_[i].offset == entries_[j].offset)
                throw std::invalid_argument("StencilSpec: duplicate offset " +
                                            entries_[i].offset.str());
}

Offset3 StencilSpec::max_abs_offset() const {
    Offset3 m{0, 0, 0};
    for (const auto& e : entries_) {
        m.dc = std::max(m.dc, std::abs(e.offset.dc));
        m.dh = std::max(m.dh, std::abs(e.offset.dh));
        m.dw = std::max(m.dw, std::abs(e.offset.dw));
    }
    return m;
}

namespace {

void add_symmetric(std::vector<StencilSpec::Entry>& v, Offset3 o, int p) {
    v.push_back({o, p});
    if (!(o == Offset3{0, 0, 0})) v.push_back({o.negated(), p});
}

}  // namespace

StencilSpec StencilSpec::identity() {
    return StencilSpec("identity", {{{0, 0, 0}, 0}}, 1);
}

StencilSpec StencilSpec::four_neighbor() {
    std::vector<Entry> v;
    add_symmetric(v, {0, 0, 0}, 0);
    add_symmetric(v, {0, 1, 0}, 1);
    add_symmetric(v, {0, 0, 1}, 1);
    return StencilSpec("four-neighbor", std::move(v), 2);
}

StencilSpec StencilSpec::eight_neighbor() {
    std::vector<Entry> v;
    add_symmetric(v, {0, 0, 0}, 0);
    add_symmetric(v, {0, 1, 0}, 1);
    add_symmetric(v, {0, 0, 1}, 1);
    add_symmetric(v, {0, 1, 1}, 2);
    add_symmetric(v, {0, 1, -1}, 2);
    return StencilSpec("eight-neighbor", std::move(v), 3);
}

StencilSpec StencilSpec::three_channel() {
    // Parameter order follows the published tables: alpha (diagonal),
    // beta (4-neighbor), gamma (same-pixel channel +-1), kappa (2-D diagonals).
    std::vector<Entry> v;
    add_symmetric(v, {0, 0, 0}, 0);
    add_symmetric(v, {0, 1, 0}, 1);
    add_symmetric(v, {0, 0, 1}, 1);
    add_symmetric(v, {1, 0, 0}, 2);
    add_symmetric(v, {0, 1, 1}, 3);
    add_symmetric(v, {0, 1, -1}, 3);
    return StencilSpec("three-channel", std::move(v), 4);
}

StencilSpec StencilSpec::ring2() {
    std::vector<Entry> v;
    add_symmetric(v, {0, 0, 0}, 0);
    add_symmetric(v, {0, 1, 0}, 1);
    add_symmetric(v, {0, 0, 1}, 1);
    add_symmetric(v, {1, 0, 0}, 2);
    add_symmetric(v, {0, 1, 1}, 3);
    add_symmetric(v, {0, 1, -1}, 3);
    // distance-2 ring: 4 axial + 8 knight-like offsets, one shared parameter
    add_symmetric(v, {0, 2, 0}, 4);
    add_symmetric(v, {0, 0, 2}, 4);
    add_symmetric(v, {0, 1, 2}, 4);
    add_symmetric(v, {0, 1, -2}, 4);
    add_symmetric(v, {0, 2, 1}, 4);
    add_symmetric(v, {0, 2, -1}, 4);
    return StencilSpec("ring2", std::move(v), 5);
}

StencilSpec StencilSpec::by_name(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "four-neighbor") return four_neighbor();
    if (name == "eight-neighbor") return eight_neighbor();
    if (name == "three-channel") return three_channel();
    if (name == "ring2") return ring2();
    throw std::invalid_argument("StencilSpec::by_name: unknown stencil '" + name + "'");
}

ModelPreset preset(const std::string& name) {
    if (name == "identity")
        return {StencilSpec::identity(), {1.0}, 1.0, 0.1, 0.1};
    if (name == "mnist")
        return {StencilSpec::eight_neighbor(),
                {21094408.0, -5116365.0, 284558.1562},
                1e-3, 0.15, 0.1};
    if (name == "vgg16")
        return {StencilSpec::three_channel(), {633.44, -24.05, -232.04, -2.00}, 1.0, 0.04, 1.0};
    if (name == "resnet50")
        return {StencilSpec::ring2(), {2631.93, -263.33, -837.16, 6.78, 28.09}, 0.5, 0.0375, 1.0};
    if (name == "inception-v3")
        return {StencilSpec::ring2(), {8964.89, -2960.87, -841.13, 1155.66, 286.03}, 0.1, 0.045,
                1.0};
    throw std::invalid_argument("preset: unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"identity", "mnist", "vgg16", "resnet50", "inception-v3"};
}

}  // namespace gradmrf
