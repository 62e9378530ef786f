#include <doctest.h>

#include <filesystem>

#include "gradmrf/oracle.hpp"
#include "test_util.hpp"

using namespace gradmrf;
using testutil::random_tensor;

TEST_CASE("synthetic oracle evaluates its quadratic form exactly") {
    Rng rng(61);
    const Shape3 shape{1, 4, 4};
    TensorGrid x0 = random_tensor(shape, rng);
    TensorGrid g = random_tensor(shape, rng);
    SyntheticOracle oracle(x0, g, 2.0, 0.9);
    TensorGrid x = random_tensor(shape, rng);
    TensorGrid d = x;
    d -= x0;
    CHECK(oracle.query(x, 0) ==
          doctest::Approx(2.0 + g.dot(d) + 0.45 * d.squared_norm()).epsilon(1e-14));
}

TEST_CASE("the query counter increases by exactly one per call") {
    Rng rng(62);
    const Shape3 shape{1, 2, 2};
    SyntheticOracle oracle(random_tensor(shape, rng), random_tensor(shape, rng));
    CHECK(oracle.queries_used() == 0);
    for (int k = 1; k <= 5; ++k) {
        (void)oracle.query(TensorGrid(shape, 0.1 * k), 0);
        CHECK(oracle.queries_used() == static_cast<std::uint64_t>(k));
    }
    oracle.reset_queries();
    CHECK(oracle.queries_used() == 0);
}

TEST_CASE("make_synthetic_dataset: balanced classes, [0,1] range, reproducible") {
    const Dataset ds = make_synthetic_dataset("bars", 1000, {1, 16, 16}, 99);
    CHECK(ds.size() == 1000);
    CHECK(ds.classes == 2);
    int ones = 0;
    for (int label : ds.labels) ones += label;
    CHECK(std::abs(ones - 500) <= 25);  // balanced within +-5%
    for (const auto& img : ds.images)
        for (std::size_t i = 0; i < img.size(); ++i) {
            CHECK(img[i] >= 0.0);
            CHECK(img[i] <= 1.0);
        }
    const Dataset again = make_synthetic_dataset("bars", 1000, {1, 16, 16}, 99);
    CHECK(testutil::max_abs_diff(ds.images[13], again.images[13]) == 0.0);
    CHECK_FALSE(ds.train_indices().empty());
    CHECK_FALSE(ds.test_indices().empty());
    CHECK_THROWS_AS(make_synthetic_dataset("moons", 10, {1, 8, 8}, 1), std::invalid_argument);
}

TEST_CASE("dataset directories round-trip") {
    namespace fs = std::filesystem;
    const auto dir = (fs::temp_directory_path() / "gradmrf_ds_rt").string();
    const Dataset ds = make_synthetic_dataset("blobs", 24, {1, 8, 8}, 5);
    save_dataset(ds, dir);
    const Dataset loaded = load_dataset(dir);
    REQUIRE(loaded.size() == ds.size());
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.is_test == ds.is_test);
    CHECK(testutil::max_abs_diff(loaded.images[7], ds.images[7]) == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("softmax regression separates linearly separable blobs") {
    const Dataset ds = make_synthetic_dataset("blobs", 400, {1, 8, 8}, 7);
    TrainOptions opts;
    opts.hidden = 0;
    opts.epochs = 300;
    opts.learning_rate = 1.0;
    const TrainResult r = train_toy(ds, opts, 11);
    CHECK(r.test_accuracy >= 0.99);
}

TEST_CASE("zero training epochs leave a uniform predictor with loss ~ log K") {
    const Dataset ds = make_synthetic_dataset("bars", 64, {1, 8, 8}, 3);
    TrainOptions opts;
    opts.hidden = 8;
    opts.epochs = 0;
    opts.init_scale = 1e-4;
    const TrainResult r = train_toy(ds, opts, 1);
    double total = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        total += r.classifier.loss(ds.images[i], ds.labels[i]);
    CHECK(total / static_cast<double>(ds.size()) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
    const Dataset ds = make_synthetic_dataset("bars", 120, {1, 8, 8}, 17);
    TrainOptions opts;
    opts.hidden = 8;
    opts.epochs = 40;
    const TrainResult a = train_toy(ds, opts, 23);
    const TrainResult b = train_toy(ds, opts, 23);
    REQUIRE(a.classifier.w_hidden.size() == b.classifier.w_hidden.size());
    for (std::size_t i = 0; i < a.classifier.w_hidden.size(); ++i)
        CHECK(a.classifier.w_hidden[i] == b.classifier.w_hidden[i]);
    for (std::size_t i = 0; i < a.classifier.w_out.size(); ++i)
        CHECK(a.classifier.w_out[i] == b.classifier.w_out[i]);
}

TEST_CASE("white-box gradient matches central finite differences") {
    const Dataset ds = make_synthetic_dataset("bars", 80, {1, 8, 8}, 29);
    for (int hidden : {0, 8}) {
        CAPTURE(hidden);
        TrainOptions opts;
        opts.hidden = hidden;
        opts.epochs = 60;
        const TrainResult r = train_toy(ds, opts, 31);
        const TensorGrid& x = ds.images[1];
        const int y = ds.labels[1];
        TensorGrid g = white_box_gradient(r.classifier, x, y);
        TensorGrid probe = x;
        const double h = 1e-6;
        for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{63}}) {
            probe[i] = x[i] + h;
            const double up = r.classifier.loss(probe, y);
            probe[i] = x[i] - h;
            const double down = r.classifier.loss(probe, y);
            probe[i] = x[i];
            const double fd = (up - down) / (2.0 * h);
            CHECK(std::abs(g[i] - fd) / std::max(1.0, std::abs(fd)) < 1e-5);
        }
    }
}

TEST_CASE("softmax regression gradient equals W^T (p - e_y) in closed form") {
    Rng rng(63);
    const Shape3 shape{1, 4, 4};
    ToyClassifier clf;
    clf.input_shape = shape;
    clf.hidden = 0;
    clf.classes = 3;
    clf.w_out.resize(3 * shape.total());
    for (double& w : clf.w_out) w = rng.normal();
    clf.b_out = {0.1, -0.2, 0.3};

    TensorGrid x = random_tensor(shape, rng);
    std::vector<double> p = clf.logits(x);
    double zmax = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (double& v : p) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : p) v /= sum;
    p[1] -= 1.0;  // label 1

    TensorGrid g = clf.input_gradient(x, 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double expected = 0.0;
        for (int k = 0; k < 3; ++k)
            expected += p[static_cast<std::size_t>(k)] * clf.w_out[static_cast<std::size_t>(k) * x.size() + i];
        CHECK(g[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("confident correct points have smaller gradients than misclassified ones") {
    const Dataset ds = make_synthetic_dataset("blobs", 400, {1, 8, 8}, 37);
    TrainOptions opts;
    opts.hidden = 0;
    opts.epochs = 400;
    opts.learning_rate = 1.0;
    const TrainResult r = train_toy(ds, opts, 41);
    // find one confidently-correct and one wrong-label evaluation
    double correct_norm = -1.0, wrong_norm = -1.0;
    for (std::size_t i = 0; i < ds.size() && (correct_norm < 0 || wrong_norm < 0); ++i) {
        if (r.classifier.predict(ds.images[i]) == ds.labels[i] && correct_norm < 0)
            correct_norm = white_box_gradient(r.classifier, ds.images[i], ds.labels[i]).norm();
        if (wrong_norm < 0)
            wrong_norm =
                white_box_gradient(r.classifier, ds.images[i], 1 - ds.labels[i]).norm();
    }
    REQUIRE(correct_norm >= 0.0);
    REQUIRE(wrong_norm >= 0.0);
    CHECK(correct_norm < wrong_norm);
}

TEST_CASE("classifier weights round-trip through GTZ1 + manifest") {
    namespace fs = std::filesystem;
    const auto dir = (fs::temp_directory_path() / "gradmrf_clf_rt").string();
    const Dataset ds = make_synthetic_dataset("bars", 64, {1, 8, 8}, 43);
    TrainOptions opts;
    opts.hidden = 4;
    opts.epochs = 20;
    const TrainResult r = train_toy(ds, opts, 47);
    r.classifier.save(dir);
    const ToyClassifier loaded = ToyClassifier::load(dir);
    CHECK(loaded.hidden == 4);
    CHECK(loaded.classes == 2);
    CHECK(loaded.w_hidden == r.classifier.w_hidden);
    CHECK(loaded.w_out == r.classifier.w_out);
    CHECK(loaded.b_hidden == r.classifier.b_hidden);
    CHECK(loaded.b_out == r.classifier.b_out);
    // identical decisions after the round trip
    for (int k = 0; k < 8; ++k)
        CHECK(loaded.predict(ds.images[static_cast<std::size_t>(k)]) ==
              r.classifier.predict(ds.images[static_cast<std::size_t>(k)]));
    fs::remove_all(dir);
}

TEST_CASE("training diverges loudly instead of silently") {
    const Dataset ds = make_synthetic_dataset("bars", 64, {1, 8, 8}, 53);
    TrainOptions opts;
    opts.hidden = 8;
    opts.epochs = 200;
    opts.learning_rate = 1e5;  // guaranteed blow-up
    CHECK_THROWS_AS(train_toy(ds, opts, 59), std::runtime_error);
}
