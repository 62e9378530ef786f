#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "gradmrf/fft.hpp"
#include "gradmrf/gmrf.hpp"
#include "gradmrf/kvfile.hpp"
#include "gradmrf/reference.hpp"
#include "test_util.hpp"

using namespace gradmrf;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

/// Random feasible parameters: unit diagonal dominance margin over the
/// off-diagonal mass guarantees a positive symbol.
ParamVector random_feasible_theta(const StencilSpec& spec, Rng& rng) {
    ParamVector theta(static_cast<std::size_t>(spec.param_count()));
    for (std::size_t p = 1; p < theta.size(); ++p) theta[p] = rng.uniform() * 2.0 - 1.0;
    double mass = 0.0;
    for (const auto& e : spec.entries())
        if (e.param != 0) mass += std::abs(theta[static_cast<std::size_t>(e.param)]);
    theta[0] = mass + 0.5 + rng.uniform();
    return theta;
}

}  // namespace

TEST_CASE("embed_stencil places a scaled identity correctly") {
    TensorGrid e = embed_stencil(StencilSpec::identity(), {3.0}, {1, 4, 4});
    CHECK(e.at(0, 0, 0) == 3.0);
    CHECK(e.sum() == 3.0);
    TensorGrid d = symbol_grid(StencilSpec::identity(), {3.0}, {1, 4, 4});
    for (double v : d.data()) CHECK(v == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("embedded stencil has a real DFT equal to the symbol grid") {
    const Shape3 shape{3, 6, 6};
    for (const char* name : {"four-neighbor", "eight-neighbor", "three-channel", "ring2"}) {
        CAPTURE(name);
        Rng rng(7);
        const auto spec = StencilSpec::by_name(name);
        const ParamVector theta = random_feasible_theta(spec, rng);
        SpectrumGrid f = fft3(embed_stencil(spec, theta, shape));
        TensorGrid d = symbol_grid(spec, theta, shape);
        double max_imag = 0.0, max_gap = 0.0, scale = 1.0;
        for (double v : d.data()) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < f.size(); ++i) {
            max_imag = std::max(max_imag, std::abs(f[i].imag()));
            max_gap = std::max(max_gap, std::abs(f[i].real() - d[i]));
        }
        CHECK(max_imag < 1e-9 * scale);
        CHECK(max_gap < 1e-9 * scale);
    }
}

TEST_CASE("embed_stencil detects wrap collisions (ambiguity)") {
    // height 2 folds the +1/-1 row offsets onto the same cell
    CHECK_THROWS_AS(embed_stencil(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 2, 3}),
                    AmbiguityError);
    // distance-2 ring on width 4 folds +2/-2
    CHECK_THROWS_AS(
        embed_stencil(StencilSpec::ring2(), {10.0, -1.0, -0.5, 0.2, 0.1}, {3, 4, 4}),
        AmbiguityError);
}

TEST_CASE("4-neighbor symbol on 1x4x4 gives the closed-form eigenvalue multiset") {
    TensorGrid d = symbol_grid(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 4, 4});
    std::map<int, int> counts;  // eigenvalues are integers {1,3,5,7,9}
    for (double v : d.data()) counts[static_cast<int>(std::lround(v))]++;
    CHECK(counts == std::map<int, int>{{1, 1}, {3, 4}, {5, 6}, {7, 4}, {9, 1}});
    for (double v : d.data())
        CHECK(std::abs(v - std::lround(v)) < 1e-12);

    // cross-check against the dense 16x16 eigendecomposition
    auto dense_eigs = ref::dense_symmetric_eigenvalues(
        ref::dense_lambda(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 4, 4}), 16);
    std::vector<double> fft_eigs(d.data());
    std::sort(fft_eigs.begin(), fft_eigs.end());
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(fft_eigs[i] == doctest::Approx(dense_eigs[i]).epsilon(1e-10));
}

TEST_CASE("infeasible parameters are reported, not silently accepted") {
    // beta = -2 drives the lowest symbol value to 5 - 8 = -3
    CHECK_FALSE(is_feasible(StencilSpec::four_neighbor(), {5.0, -2.0}, {1, 4, 4}));
    CHECK_THROWS_AS(GmrfModel::build(StencilSpec::four_neighbor(), {5.0, -2.0}, {1, 4, 4}),
                    NotPositiveDefiniteError);
    // boundary case: beta = -alpha/4 exactly touches zero
    CHECK_FALSE(is_feasible(StencilSpec::four_neighbor(), {4.0, -1.0}, {1, 4, 4}));
}

TEST_CASE("logdet of alpha*I on 1x4x4 is 16*log(alpha)") {
    auto model = GmrfModel::build(StencilSpec::identity(), {2.0}, {1, 4, 4});
    CHECK(model.logdet() == doctest::Approx(16.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logdet of the 4-neighbor fixture matches the closed form and dense oracle") {
    auto model = GmrfModel::build(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 4, 4});
    const double expected = std::log(1.0) + 4 * std::log(3.0) + 6 * std::log(5.0) +
                            4 * std::log(7.0) + std::log(9.0);
    CHECK(std::abs(model.logdet() - expected) < 1e-9);
    const double dense = ref::dense_logdet(
        ref::dense_lambda(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 4, 4}), 16);
    CHECK(std::abs(model.logdet() - dense) < 1e-9);
}

TEST_CASE("VGG16 preset logdet matches the dense oracle on 3x8x8") {
    const ModelPreset p = preset("vgg16");
    auto model = GmrfModel::build(p.spec, p.theta, {3, 8, 8});
    const double dense =
        ref::dense_logdet(ref::dense_lambda(p.spec, p.theta, {3, 8, 8}), 3 * 8 * 8);
    CHECK(std::abs(model.logdet() - dense) / std::abs(dense) < 1e-8);
}

TEST_CASE("solve_precision: scalar model divides by alpha") {
    Rng rng(21);
    auto model = GmrfModel::build(StencilSpec::identity(), {2.0}, {2, 3, 3});
    TensorGrid v = random_tensor({2, 3, 3}, rng);
    TensorGrid half = model.solve(v);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(half[i] == doctest::Approx(v[i] / 2.0).epsilon(1e-12));
}

TEST_CASE("apply(solve(v)) is the identity to 1e-10 relative") {
    Rng rng(22);
    auto model = GmrfModel::build(StencilSpec::eight_neighbor(), {6.0, -1.0, 0.3}, {1, 8, 8});
    TensorGrid v = random_tensor({1, 8, 8}, rng);
    CHECK(testutil::rel_diff(model.apply(model.solve(v)), v) < 1e-10);
}

TEST_CASE("solve matches the dense linear solve on the delta input") {
    const Shape3 shape{1, 4, 4};
    auto model = GmrfModel::build(StencilSpec::four_neighbor(), {5.0, -1.0}, shape);
    TensorGrid delta(shape);
    delta.at(0, 1, 2) = 1.0;
    TensorGrid fast = model.solve(delta);
    TensorGrid dense =
        ref::dense_solve(ref::dense_lambda(StencilSpec::four_neighbor(), {5.0, -1.0}, shape),
                         delta);
    CHECK(max_abs_diff(fast, dense) < 1e-10);
}

TEST_CASE("dense-oracle agreement for every preset stencil and random feasible theta") {
    Rng rng(23);
    const Shape3 shape{3, 6, 6};
    for (const char* name : {"identity", "four-neighbor", "eight-neighbor", "three-channel",
                             "ring2"}) {
        CAPTURE(name);
        const auto spec = StencilSpec::by_name(name);
        const ParamVector theta = random_feasible_theta(spec, rng);
        REQUIRE(is_feasible(spec, theta, shape));
        auto model = GmrfModel::build(spec, theta, shape);
        const auto dense = ref::dense_lambda(spec, theta, shape);
        TensorGrid v = random_tensor(shape, rng);

        CHECK(testutil::rel_diff(model.apply(v), ref::dense_matvec(dense, v)) < 1e-8);
        CHECK(testutil::rel_diff(model.solve(v), ref::dense_solve(dense, v)) < 1e-8);
        const double ld = ref::dense_logdet(dense, shape.total());
        CHECK(std::abs(model.logdet() - ld) / std::max(1.0, std::abs(ld)) < 1e-8);
    }
}

TEST_CASE("symbol grid does not depend on the +/- enumeration order of offsets") {
    // same topology, entries listed with the negated member first
    std::vector<StencilSpec::Entry> flipped{{{0, 0, 0}, 0}, {{0, -1, 0}, 1}, {{0, 1, 0}, 1},
                                            {{0, 0, -1}, 1}, {{0, 0, 1}, 1}};
    StencilSpec reversed("four-neighbor-flipped", flipped, 2);
    TensorGrid a = symbol_grid(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 6, 6});
    TensorGrid b = symbol_grid(reversed, {5.0, -1.0}, {1, 6, 6});
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("scaling theta by s shifts logdet by N*log(s) exactly") {
    const Shape3 shape{2, 5, 5};
    const auto spec = StencilSpec::four_neighbor();
    auto base = GmrfModel::build(spec, {5.0, -1.0}, shape);
    const double s = 3.5;
    auto scaled = GmrfModel::build(spec, {5.0 * s, -1.0 * s}, shape);
    CHECK(scaled.logdet() ==
          doctest::Approx(base.logdet() + static_cast<double>(shape.total()) * std::log(s))
              .epsilon(1e-12));
}

TEST_CASE("sample_prior is bit-identical for a fixed seed") {
    auto model = GmrfModel::build(StencilSpec::four_neighbor(), {5.0, -1.0}, {1, 8, 8});
    TensorGrid a = model.sample_prior(777);
    TensorGrid b = model.sample_prior(777);
    CHECK(max_abs_diff(a, b) == 0.0);
    TensorGrid c = model.sample_prior(778);
    CHECK(max_abs_diff(a, c) > 0.0);
}

TEST_CASE("identity prior: per-entry sample variance is 1.0 +- 0.02 over 1e5 draws") {
    auto model = GmrfModel::build(StencilSpec::identity(), {1.0}, {1, 2, 2});
    const int draws = 100000;
    std::vector<double> sumsq(4, 0.0);
    for (int k = 0; k < draws; ++k) {
        TensorGrid x = model.sample_prior(static_cast<std::uint64_t>(k) + 1);
        for (std::size_t i = 0; i < 4; ++i) sumsq[i] += x[i] * x[i];
    }
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::abs(sumsq[i] / draws - 1.0) < 0.02);
}

TEST_CASE("4-neighbor prior: sample covariance within 3 SE of dense Lambda^-1") {
    const Shape3 shape{1, 4, 4};
    const std::size_t n = shape.total();
    auto model = GmrfModel::build(StencilSpec::four_neighbor(), {5.0, -1.0}, shape);
    const auto cov =
        ref::dense_inverse(ref::dense_lambda(StencilSpec::four_neighbor(), {5.0, -1.0}, shape),
                           n);
    const int draws = 100000;
    std::vector<double> acc(n * n, 0.0);
    for (int k = 0; k < draws; ++k) {
        TensorGrid x = model.sample_prior(static_cast<std::uint64_t>(k) + 9000);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) acc[i * n + j] += x[i] * x[j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double est = acc[i * n + j] / draws;
            // Var(x_i x_j) = S_ii S_jj + S_ij^2 for a zero-mean Gaussian
            const double se = std::sqrt(
                (cov[i * n + i] * cov[j * n + j] + cov[i * n + j] * cov[i * n + j]) / draws);
            CHECK(std::abs(est - cov[i * n + j]) < 3.0 * se);
        }
}

TEST_CASE("presets expose the published stencils and parameters") {
    CHECK(preset("identity").theta == ParamVector{1.0});
    CHECK(preset("identity").spec.entries().size() == 1);

    const ModelPreset mnist = preset("mnist");
    CHECK(mnist.spec.name() == "eight-neighbor");
    CHECK(mnist.spec.entries().size() == 9);  // diagonal + 4 cross + 4 diagonal neighbors
    CHECK(mnist.theta == ParamVector{21094408.0, -5116365.0, 284558.1562});
    CHECK(mnist.sigma2 == 1e-3);
    CHECK(mnist.delta1 == 0.15);

    const ModelPreset vgg = preset("vgg16");
    CHECK(vgg.theta == ParamVector{633.44, -24.05, -232.04, -2.00});

    const ModelPreset resnet = preset("resnet50");
    CHECK(resnet.spec.name() == "ring2");
    CHECK(resnet.spec.entries().size() == 9 + 2 + 12);  // + cross-channel pair + distance-2 ring
    CHECK(resnet.theta == ParamVector{2631.93, -263.33, -837.16, 6.78, 28.09});

    const ModelPreset inception = preset("inception-v3");
    CHECK(inception.theta == ParamVector{8964.89, -2960.87, -841.13, 1155.66, 286.03});

    CHECK_THROWS_AS(preset("lenet"), std::invalid_argument);
    CHECK_THROWS_AS(StencilSpec::by_name("hexagon"), std::invalid_argument);
}

TEST_CASE("preset models are feasible on representative shapes") {
    CHECK(is_feasible(preset("mnist").spec, preset("mnist").theta, {1, 16, 16}));
    CHECK(is_feasible(preset("vgg16").spec, preset("vgg16").theta, {3, 8, 8}));
    CHECK(is_feasible(preset("resnet50").spec, preset("resnet50").theta, {3, 8, 8}));
    CHECK(is_feasible(preset("inception-v3").spec, preset("inception-v3").theta, {3, 8, 8}));
}

TEST_CASE("model files round-trip through the key-value format") {
    namespace fs = std::filesystem;
    const auto path = (fs::temp_directory_path() / "gradmrf_model_rt.kv").string();
    const ModelPreset p = preset("resnet50");
    save_model_file(path, p.spec, p.theta, p.sigma2, p.delta1);
    const ModelFile loaded = load_model_file(path);
    CHECK(loaded.theta == p.theta);
    CHECK(loaded.sigma2 == p.sigma2);
    CHECK(loaded.delta1 == p.delta1);
    CHECK(loaded.spec.entries().size() == p.spec.entries().size());
    for (std::size_t i = 0; i < p.spec.entries().size(); ++i) {
        CHECK(loaded.spec.entries()[i].offset == p.spec.entries()[i].offset);
        CHECK(loaded.spec.entries()[i].param == p.spec.entries()[i].param);
    }
    fs::remove(path);
}
