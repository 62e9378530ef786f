#include "gradmrf/gmrf.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "gradmrf/fft.hpp"
#include "gradmrf/rng.hpp"

namespace gradmrf {

namespace {

void require_theta(const StencilSpec& spec, const ParamVector& theta) {
    if (static_cast<int>(theta.size()) != spec.param_count())
        throw std::invalid_argument("stencil '" + spec.name() + "' expects " +
                                    std::to_string(spec.param_count()) + " parameters, got " +
                                    std::to_string(theta.size()));
}

void require_offsets_fit(const StencilSpec& spec, Shape3 shape, const char* where) {
    const Offset3 m = spec.max_abs_offset();
    if (m.dc >= shape.c || m.dh >= shape.h || m.dw >= shape.w)
        throw ShapeError(std::string(where) + ": stencil '" + spec.name() +
                         "' offsets do not fit shape " + shape.str());
}

}  // namespace

TensorGrid embed_stencil(const StencilSpec& spec, const ParamVector& theta, Shape3 shape) {
    require_theta(spec, theta);
    require_offsets_fit(spec, shape, "embed_stencil");
    TensorGrid out(shape);
    std::vector<char> occupied(shape.total(), 0);
    for (const auto& e : spec.entries()) {
        const std::size_t idx = out.index(wrap_index(e.offset.dc, shape.c),
                                          wrap_index(e.offset.dh, shape.h),
                                          wrap_index(e.offset.dw, shape.w));
        if (occupied[idx])
            throw AmbiguityError("embed_stencil: offsets " + e.offset.str() +
                                 " and a prior offset wrap onto the same cell for shape " +
                                 shape.str());
        occupied[idx] = 1;
        out[idx] = theta[static_cast<std::size_t>(e.param)];
    }
    return out;
}

TensorGrid symbol_grid(const StencilSpec& spec, const ParamVector& theta, Shape3 shape) {
    require_theta(spec, theta);
    require_offsets_fit(spec, shape, "symbol_grid");
    TensorGrid d(shape);
    const double two_pi = 2.0 * std::numbers::pi;
    const long long total = static_cast<long long>(shape.total());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < total; ++i) {
        const int kc = static_cast<int>(i / (shape.h * shape.w));
        const int kh = static_cast<int>((i / shape.w) % shape.h);
        const int kw = static_cast<int>(i % shape.w);
        double acc = 0.0;
        for (const auto& e : spec.entries()) {
            const double phase = two_pi * (static_cast<double>(e.offset.dc) * kc / shape.c +
                                           static_cast<double>(e.offset.dh) * kh / shape.h +
                                           static_cast<double>(e.offset.dw) * kw / shape.w);
            acc += theta[static_cast<std::size_t>(e.param)] * std::cos(phase);
        }
        d[static_cast<std::size_t>(i)] = acc;
    }
    return d;
}

TensorGrid circular_convolve(const TensorGrid& t, const StencilSpec& spec,
                             const ParamVector& theta) {
    require_theta(spec, theta);
    const Shape3 shape = t.shape();
    require_offsets_fit(spec, shape, "circular_convolve");

    // per-offset wrapped index tables, one per axis
    const auto& entries = spec.entries();
    const std::size_t ne = entries.size();
    std::vector<std::vector<int>> map_c(ne), map_h(ne), map_w(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        map_c[e].resize(shape.c);
        map_h[e].resize(shape.h);
        map_w[e].resize(shape.w);
        for (int i = 0; i < shape.c; ++i) map_c[e][i] = wrap_index(i + entries[e].offset.dc, shape.c);
        for (int i = 0; i < shape.h; ++i) map_h[e][i] = wrap_index(i + entries[e].offset.dh, shape.h);
        for (int i = 0; i < shape.w; ++i) map_w[e][i] = wrap_index(i + entries[e].offset.dw, shape.w);
    }

    TensorGrid out(shape);
    const long long total = static_cast<long long>(shape.total());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < total; ++i) {
        const int ic = static_cast<int>(i / (shape.h * shape.w));
        const int ih = static_cast<int>((i / shape.w) % shape.h);
        const int iw = static_cast<int>(i % shape.w);
        double acc = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
            acc += theta[static_cast<std::size_t>(entries[e].param)] *
                   t.at(map_c[e][ic], map_h[e][ih], map_w[e][iw]);
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

bool symbol_is_feasible(const TensorGrid& eigs) {
    double dmin = eigs[0], dmax = eigs[0];
    for (double v : eigs.data()) {
        dmin = std::min(dmin, v);
        dmax = std::max(dmax, v);
    }
    return dmax > 0.0 && dmin > 1e-12 * dmax;
}

bool is_feasible(const StencilSpec& spec, const ParamVector& theta, Shape3 shape) {
    return symbol_is_feasible(symbol_grid(spec, theta, shape));
}

GmrfModel::GmrfModel(StencilSpec spec, ParamVector theta, Shape3 shape, TensorGrid eigs)
    : spec_(std::move(spec)), theta_(std::move(theta)), shape_(shape), eigs_(std::move(eigs)) {}

GmrfModel GmrfModel::build(StencilSpec spec, ParamVector theta, Shape3 shape) {
    // embed_stencil performs the wrap-collision (ambiguity) validation
    (void)embed_stencil(spec, theta, shape);
    TensorGrid eigs = symbol_grid(spec, theta, shape);
    if (!symbol_is_feasible(eigs)) {
        double dmin = eigs[0];
        for (double v : eigs.data()) dmin = std::min(dmin, v);
        throw NotPositiveDefiniteError("GmrfModel: stencil '" + spec.name() + "' on " +
                                       shape.str() + " is not positive definite (min eigenvalue " +
                                       std::to_string(dmin) + ")");
    }
    return GmrfModel(std::move(spec), std::move(theta), shape, std::move(eigs));
}

std::shared_ptr<const GmrfModel> GmrfModel::build_shared(StencilSpec spec, ParamVector theta,
                                                         Shape3 shape) {
    return std::make_shared<const GmrfModel>(build(std::move(spec), std::move(theta), shape));
}

double GmrfModel::logdet() const {
    double acc = 0.0;
    for (double d : eigs_.data()) acc += std::log(d);
    return acc;
}

TensorGrid GmrfModel::apply(const TensorGrid& v) const {
    if (!(v.shape() == shape_))
        throw ShapeError("GmrfModel::apply: shape mismatch " + v.shape().str() + " vs " +
                         shape_.str());
    return circular_convolve(v, spec_, theta_);
}

TensorGrid GmrfModel::solve(const TensorGrid& v) const {
    if (!(v.shape() == shape_))
        throw ShapeError("GmrfModel::solve: shape mismatch " + v.shape().str() + " vs " +
                         shape_.str());
    SpectrumGrid s = fft3(v);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] /= eigs_[i];
    return ifft3_real(s);
}

TensorGrid GmrfModel::sample_prior(std::uint64_t seed) const {
    Rng rng(seed);
    TensorGrid noise(shape_);
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
    SpectrumGrid s = fft3(noise);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] /= std::sqrt(eigs_[i]);
    return ifft3_real(s);
}

}  // namespace gradmrf
