#include "gradmrf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "gradmrf/kvfile.hpp"
#include "gradmrf/rng.hpp"

namespace gradmrf {

SyntheticOracle::SyntheticOracle(TensorGrid anchor, TensorGrid true_gradient, double base_loss,
                                 double curvature)
    : anchor_(std::move(anchor)),
      grad_(std::move(true_gradient)),
      base_loss_(base_loss),
      curvature_(curvature) {
    if (!(anchor_.shape() == grad_.shape()))
        throw ShapeError("SyntheticOracle: anchor/gradient shape mismatch");
}

double SyntheticOracle::evaluate(const TensorGrid& x, int /*label*/) const {
    TensorGrid d = x;
    d -= anchor_;
    return base_loss_ + grad_.dot(d) + 0.5 * curvature_ * d.squared_norm();
}

std::vector<std::size_t> Dataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < images.size(); ++i)
        if (!is_test[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < images.size(); ++i)
        if (is_test[i]) out.push_back(i);
    return out;
}

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

/// Horizontal (class 0) vs vertical (class 1) sinusoidal stripes plus noise.
TensorGrid bars_image(Shape3 shape, int label, Rng& rng) {
    TensorGrid img(shape);
    const double phase = rng.uniform() * 2.0 * std::numbers::pi;
    const double freq = 2.0;
    const double amp = 0.30 + 0.10 * rng.uniform();
    for (int c = 0; c < shape.c; ++c)
        for (int y = 0; y < shape.h; ++y)
            for (int x = 0; x < shape.w; ++x) {
                const double t = label == 0 ? static_cast<double>(y) / shape.h
                                            : static_cast<double>(x) / shape.w;
                const double v = 0.5 + amp * std::sin(2.0 * std::numbers::pi * freq * t + phase) +
                                 0.08 * rng.normal();
                img.at(c, y, x) = clip01(v);
            }
    return img;
}

/// One smooth Gaussian bump whose center depends on the class, plus noise.
TensorGrid blobs_image(Shape3 shape, int label, Rng& rng) {
    TensorGrid img(shape);
    const double cy = (label == 0 ? 0.32 : 0.68) * shape.h + rng.normal() * 0.06 * shape.h;
    const double cx = (label == 0 ? 0.32 : 0.68) * shape.w + rng.normal() * 0.06 * shape.w;
    const double radius = 0.18 * std::min(shape.h, shape.w);
    for (int c = 0; c < shape.c; ++c)
        for (int y = 0; y < shape.h; ++y)
            for (int x = 0; x < shape.w; ++x) {
                const double dy = (y - cy) / radius;
                const double dx = (x - cx) / radius;
                const double v =
                    0.15 + 0.75 * std::exp(-0.5 * (dy * dy + dx * dx)) + 0.05 * rng.normal();
                img.at(c, y, x) = clip01(v);
            }
    return img;
}

}  // namespace

Dataset make_synthetic_dataset(const std::string& kind, std::size_t size, Shape3 shape,
                               std::uint64_t seed) {
    if (kind != "bars" && kind != "blobs")
        throw std::invalid_argument("make_synthetic_dataset: unknown kind '" + kind + "'");
    Dataset ds;
    ds.shape = shape;
    ds.classes = 2;
    Rng rng(seed);
    const std::size_t test_start = size - size / 4;  // last quarter tagged test
    for (std::size_t i = 0; i < size; ++i) {
        const int label = static_cast<int>(i % 2);  // exactly balanced
        ds.images.push_back(kind == "bars" ? bars_image(shape, label, rng)
                                           : blobs_image(shape, label, rng));
        ds.labels.push_back(label);
        ds.is_test.push_back(i >= test_start ? 1 : 0);
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    KvFile kv;
    kv.add_int("count", static_cast<long long>(ds.size()));
    kv.add("shape", {std::to_string(ds.shape.c), std::to_string(ds.shape.h),
                     std::to_string(ds.shape.w)});
    kv.add_int("classes", ds.classes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05zu.gtz", i);
        write_gtz(dir + "/" + name, ds.images[i]);
        kv.add("image", {name, std::to_string(ds.labels[i]),
                         ds.is_test[i] ? std::string("test") : std::string("train")});
    }
    kv.save(dir + "/dataset.kv");
}

Dataset load_dataset(const std::string& dir) {
    const KvFile kv = KvFile::load(dir + "/dataset.kv");
    Dataset ds;
    const auto shape_vals = kv.get("shape");
    if (shape_vals.size() != 3) throw ConfigError("dataset.kv: shape expects 'c h w'");
    ds.shape = {std::stoi(shape_vals[0]), std::stoi(shape_vals[1]), std::stoi(shape_vals[2])};
    ds.classes = static_cast<int>(kv.get_int("classes"));
    for (const auto& rec : kv.all("image")) {
        if (rec.size() != 3) throw ConfigError("dataset.kv: image expects 'file label split'");
        TensorGrid img = read_gtz(dir + "/" + rec[0]);
        if (!(img.shape() == ds.shape))
            throw ConfigError("dataset.kv: image " + rec[0] + " has wrong shape");
        const int label = std::stoi(rec[1]);
        if (label < 0 || label >= ds.classes)
            throw ConfigError("dataset.kv: label out of range in " + rec[0]);
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
        ds.is_test.push_back(rec[2] == "test" ? 1 : 0);
    }
    if (ds.images.empty()) throw ConfigError("dataset.kv: no images listed");
    return ds;
}

namespace {

/// In-place softmax from logits; returns log-sum-exp for the loss.
double softmax_inplace(std::vector<double>& z) {
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return zmax + std::log(sum);
}

}  // namespace

std::vector<double> ToyClassifier::logits(const TensorGrid& x) const {
    if (!(x.shape() == input_shape))
        throw ShapeError("ToyClassifier: input shape mismatch " + x.shape().str());
    const std::size_t n = x.size();
    if (hidden == 0) {
        std::vector<double> z(classes);
        for (int k = 0; k < classes; ++k) {
            double acc = b_out[static_cast<std::size_t>(k)];
            const double* row = &w_out[static_cast<std::size_t>(k) * n];
            for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
            z[static_cast<std::size_t>(k)] = acc;
        }
        return z;
    }
    std::vector<double> a(static_cast<std::size_t>(hidden));
    for (int j = 0; j < hidden; ++j) {
        double acc = b_hidden[static_cast<std::size_t>(j)];
        const double* row = &w_hidden[static_cast<std::size_t>(j) * n];
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
        a[static_cast<std::size_t>(j)] = std::tanh(acc);
    }
    std::vector<double> z(classes);
    for (int k = 0; k < classes; ++k) {
        double acc = b_out[static_cast<std::size_t>(k)];
        const double* row = &w_out[static_cast<std::size_t>(k) * hidden];
        for (int j = 0; j < hidden; ++j) acc += row[j] * a[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(k)] = acc;
    }
    return z;
}

double ToyClassifier::loss(const TensorGrid& x, int label) const {
    std::vector<double> z = logits(x);
    const double zy = z[static_cast<std::size_t>(label)];
    const double lse = softmax_inplace(z);
    return lse - zy;
}

int ToyClassifier::predict(const TensorGrid& x) const {
    const std::vector<double> z = logits(x);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

TensorGrid ToyClassifier::input_gradient(const TensorGrid& x, int label) const {
    const std::size_t n = x.size();
    TensorGrid g(input_shape);
    if (hidden == 0) {
        std::vector<double> p = logits(x);
        softmax_inplace(p);
        p[static_cast<std::size_t>(label)] -= 1.0;  // dL/dz = softmax - e_y
        for (int k = 0; k < classes; ++k) {
            const double* row = &w_out[static_cast<std::size_t>(k) * n];
            const double pk = p[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < n; ++i) g[i] += pk * row[i];
        }
        return g;
    }
    std::vector<double> a(static_cast<std::size_t>(hidden));
    for (int j = 0; j < hidden; ++j) {
        double acc = b_hidden[static_cast<std::size_t>(j)];
        const double* row = &w_hidden[static_cast<std::size_t>(j) * n];
        for (std::size_t i = 0; i < n; ++i) acc += row[i] * x[i];
        a[static_cast<std::size_t>(j)] = std::tanh(acc);
    }
    std::vector<double> p(classes);
    for (int k = 0; k < classes; ++k) {
        double acc = b_out[static_cast<std::size_t>(k)];
        const double* row = &w_out[static_cast<std::size_t>(k) * hidden];
        for (int j = 0; j < hidden; ++j) acc += row[j] * a[static_cast<std::size_t>(j)];
        p[static_cast<std::size_t>(k)] = acc;
    }
    softmax_inplace(p);
    p[static_cast<std::size_t>(label)] -= 1.0;
    std::vector<double> dhidden(static_cast<std::size_t>(hidden), 0.0);
    for (int k = 0; k < classes; ++k) {
        const double* row = &w_out[static_cast<std::size_t>(k) * hidden];
        const double pk = p[static_cast<std::size_t>(k)];
        for (int j = 0; j < hidden; ++j) dhidden[static_cast<std::size_t>(j)] += pk * row[j];
    }
    for (int j = 0; j < hidden; ++j) {
        const double aj = a[static_cast<std::size_t>(j)];
        const double dj = dhidden[static_cast<std::size_t>(j)] * (1.0 - aj * aj);
        const double* row = &w_hidden[static_cast<std::size_t>(j) * n];
        for (std::size_t i = 0; i < n; ++i) g[i] += dj * row[i];
    }
    return g;
}

TensorGrid white_box_gradient(const ToyClassifier& clf, const TensorGrid& x, int label) {
    return clf.input_gradient(x, label);
}

void ToyClassifier::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    KvFile kv;
    kv.add("input_shape", {std::to_string(input_shape.c), std::to_string(input_shape.h),
                           std::to_string(input_shape.w)});
    kv.add_int("hidden", hidden);
    kv.add_int("classes", classes);
    const std::size_t n = input_shape.total();
    auto dump = [&](const std::string& name, const std::vector<double>& v, int rows, int cols) {
        if (v.empty()) return;
        TensorGrid t = TensorGrid::from_data({1, rows, cols}, v);
        write_gtz(dir + "/" + name + ".gtz", t);
        kv.add_scalar("tensor." + name, name + ".gtz");
    };
    if (hidden > 0) {
        dump("w_hidden", w_hidden, hidden, static_cast<int>(n));
        dump("b_hidden", b_hidden, 1, hidden);
        dump("w_out", w_out, classes, hidden);
    } else {
        dump("w_out", w_out, classes, static_cast<int>(n));
    }
    dump("b_out", b_out, 1, classes);
    kv.save(dir + "/classifier.kv");
}

ToyClassifier ToyClassifier::load(const std::string& dir) {
    const KvFile kv = KvFile::load(dir + "/classifier.kv");
    ToyClassifier clf;
    const auto shape_vals = kv.get("input_shape");
    clf.input_shape = {std::stoi(shape_vals[0]), std::stoi(shape_vals[1]),
                       std::stoi(shape_vals[2])};
    clf.hidden = static_cast<int>(kv.get_int("hidden"));
    clf.classes = static_cast<int>(kv.get_int("classes"));
    auto slurp = [&](const std::string& name) -> std::vector<double> {
        if (!kv.has("tensor." + name)) return {};
        return read_gtz(dir + "/" + kv.get_scalar("tensor." + name)).data();
    };
    clf.w_hidden = slurp("w_hidden");
    clf.b_hidden = slurp("b_hidden");
    clf.w_out = slurp("w_out");
    clf.b_out = slurp("b_out");
    return clf;
}

namespace {

double accuracy(const ToyClassifier& clf, const Dataset& ds,
                const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i : idx)
        if (clf.predict(ds.images[i]) == ds.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train_toy(const Dataset& data, const TrainOptions& opts, std::uint64_t seed) {
    if (data.images.empty()) throw std::invalid_argument("train_toy: empty dataset");
    const std::size_t n = data.shape.total();
    const auto train_idx = data.train_indices();
    if (train_idx.empty()) throw std::invalid_argument("train_toy: no training split");

    ToyClassifier clf;
    clf.input_shape = data.shape;
    clf.hidden = opts.hidden;
    clf.classes = data.classes;
    Rng rng(seed);
    auto init = [&](std::vector<double>& v, std::size_t count, double scale) {
        v.resize(count);
        for (double& x : v) x = scale * rng.normal();
    };
    if (clf.hidden > 0) {
        init(clf.w_hidden, static_cast<std::size_t>(clf.hidden) * n,
             opts.init_scale / std::sqrt(static_cast<double>(n)));
        clf.b_hidden.assign(static_cast<std::size_t>(clf.hidden), 0.0);
        init(clf.w_out, static_cast<std::size_t>(clf.classes) * clf.hidden,
             opts.init_scale / std::sqrt(static_cast<double>(clf.hidden)));
    } else {
        init(clf.w_out, static_cast<std::size_t>(clf.classes) * n,
             opts.init_scale / std::sqrt(static_cast<double>(n)));
    }
    clf.b_out.assign(static_cast<std::size_t>(clf.classes), 0.0);

    TrainResult result;
    const double inv_batch = 1.0 / static_cast<double>(train_idx.size());
    std::vector<double> gw_hidden(clf.w_hidden.size()), gb_hidden(clf.b_hidden.size());
    std::vector<double> gw_out(clf.w_out.size()), gb_out(clf.b_out.size());

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::fill(gw_hidden.begin(), gw_hidden.end(), 0.0);
        std::fill(gb_hidden.begin(), gb_hidden.end(), 0.0);
        std::fill(gw_out.begin(), gw_out.end(), 0.0);
        std::fill(gb_out.begin(), gb_out.end(), 0.0);
        double epoch_loss = 0.0;

        for (std::size_t i : train_idx) {
            const TensorGrid& x = data.images[i];
            const int y = data.labels[i];
            if (clf.hidden == 0) {
                std::vector<double> p = clf.logits(x);
                const double zy = p[static_cast<std::size_t>(y)];
                epoch_loss += softmax_inplace(p) - zy;
                p[static_cast<std::size_t>(y)] -= 1.0;
                for (int k = 0; k < clf.classes; ++k) {
                    const double pk = p[static_cast<std::size_t>(k)];
                    double* row = &gw_out[static_cast<std::size_t>(k) * n];
                    for (std::size_t d = 0; d < n; ++d) row[d] += pk * x[d];
                    gb_out[static_cast<std::size_t>(k)] += pk;
                }
            } else {
                std::vector<double> a(static_cast<std::size_t>(clf.hidden));
                for (int j = 0; j < clf.hidden; ++j) {
                    double acc = clf.b_hidden[static_cast<std::size_t>(j)];
                    const double* row = &clf.w_hidden[static_cast<std::size_t>(j) * n];
                    for (std::size_t d = 0; d < n; ++d) acc += row[d] * x[d];
                    a[static_cast<std::size_t>(j)] = std::tanh(acc);
                }
                std::vector<double> p(static_cast<std::size_t>(clf.classes));
                for (int k = 0; k < clf.classes; ++k) {
                    double acc = clf.b_out[static_cast<std::size_t>(k)];
                    const double* row = &clf.w_out[static_cast<std::size_t>(k) * clf.hidden];
                    for (int j = 0; j < clf.hidden; ++j)
                        acc += row[j] * a[static_cast<std::size_t>(j)];
                    p[static_cast<std::size_t>(k)] = acc;
                }
                const double zy = p[static_cast<std::size_t>(y)];
                epoch_loss += softmax_inplace(p) - zy;
                p[static_cast<std::size_t>(y)] -= 1.0;
                std::vector<double> dh(static_cast<std::size_t>(clf.hidden), 0.0);
                for (int k = 0; k < clf.classes; ++k) {
                    const double pk = p[static_cast<std::size_t>(k)];
                    double* grow = &gw_out[static_cast<std::size_t>(k) * clf.hidden];
                    const double* row = &clf.w_out[static_cast<std::size_t>(k) * clf.hidden];
                    for (int j = 0; j < clf.hidden; ++j) {
                        grow[j] += pk * a[static_cast<std::size_t>(j)];
                        dh[static_cast<std::size_t>(j)] += pk * row[j];
                    }
                    gb_out[static_cast<std::size_t>(k)] += pk;
                }
                for (int j = 0; j < clf.hidden; ++j) {
                    const double aj = a[static_cast<std::size_t>(j)];
                    const double dj = dh[static_cast<std::size_t>(j)] * (1.0 - aj * aj);
                    double* row = &gw_hidden[static_cast<std::size_t>(j) * n];
                    for (std::size_t d = 0; d < n; ++d) row[d] += dj * x[d];
                    gb_hidden[static_cast<std::size_t>(j)] += dj;
                }
            }
        }

        epoch_loss *= inv_batch;
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train_toy: diverged (non-finite loss) at epoch " +
                                     std::to_string(epoch));
        result.loss_trace.push_back(epoch_loss);
        const double step = opts.learning_rate * inv_batch;
        for (std::size_t i = 0; i < clf.w_hidden.size(); ++i) clf.w_hidden[i] -= step * gw_hidden[i];
        for (std::size_t i = 0; i < clf.b_hidden.size(); ++i) clf.b_hidden[i] -= step * gb_hidden[i];
        for (std::size_t i = 0; i < clf.w_out.size(); ++i) clf.w_out[i] -= step * gw_out[i];
        for (std::size_t i = 0; i < clf.b_out.size(); ++i) clf.b_out[i] -= step * gb_out[i];
    }

    result.train_accuracy = accuracy(clf, data, train_idx);
    result.test_accuracy = accuracy(clf, data, data.test_indices());
    result.classifier = std::move(clf);
    return result;
}

}  // namespace gradmrf
