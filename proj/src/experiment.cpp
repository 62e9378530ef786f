#include "gradmrf/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gradmrf/autocorr.hpp"
#include "gradmrf/posterior.hpp"
#include "gradmrf/rng.hpp"
#include "gradmrf/version.hpp"

namespace gradmrf {

namespace {

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KvFile& kv) {
    ExperimentConfig c;
    c.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", static_cast<long long>(c.seed)));
    c.out_dir = kv.get_scalar_or("out_dir", c.out_dir);
    c.dataset_dir = kv.get_scalar_or("dataset_dir", c.dataset_dir);
    c.dataset_kind = kv.get_scalar_or("dataset_kind", c.dataset_kind);
    c.dataset_size = static_cast<int>(kv.get_int_or("dataset_size", c.dataset_size));
    if (kv.has("shape")) {
        const auto v = kv.get("shape");
        if (v.size() != 3) throw ConfigError("config: shape expects 'c h w'");
        c.shape = {std::stoi(v[0]), std::stoi(v[1]), std::stoi(v[2])};
    }
    c.classifier_dir = kv.get_scalar_or("classifier_dir", c.classifier_dir);
    c.hidden = static_cast<int>(kv.get_int_or("hidden", c.hidden));
    c.epochs = static_cast<int>(kv.get_int_or("epochs", c.epochs));
    c.learning_rate = kv.get_double_or("learning_rate", c.learning_rate);
    c.model_file = kv.get_scalar_or("model_file", c.model_file);
    c.stencil = kv.get_scalar_or("stencil", c.stencil);
    c.fit_images = static_cast<int>(kv.get_int_or("fit_images", c.fit_images));
    c.fit_directions = static_cast<int>(kv.get_int_or("fit_directions", c.fit_directions));
    c.fit_delta = kv.get_double_or("fit_delta", c.fit_delta);
    if (kv.has("epsilons")) c.epsilons = kv.get_doubles("epsilons");
    if (kv.has("budgets")) {
        c.budgets.clear();
        for (double b : kv.get_doubles("budgets")) c.budgets.push_back(static_cast<int>(b));
    }
    if (kv.has("variants")) c.variants = kv.get("variants");
    c.direction_source = kv.get_scalar_or("direction_source", c.direction_source);
    c.basis_kind = kv.get_scalar_or("basis_kind", c.basis_kind);
    c.sigma2 = kv.get_double_or("sigma2", c.sigma2);
    c.delta1 = kv.get_double_or("delta1", c.delta1);
    c.max_images = static_cast<int>(kv.get_int_or("max_images", c.max_images));
    return c;
}

KvFile ExperimentConfig::to_kv() const {
    KvFile kv;
    kv.add_int("seed", static_cast<long long>(seed));
    kv.add_scalar("out_dir", out_dir);
    if (!dataset_dir.empty()) kv.add_scalar("dataset_dir", dataset_dir);
    kv.add_scalar("dataset_kind", dataset_kind);
    kv.add_int("dataset_size", dataset_size);
    kv.add("shape", {std::to_string(shape.c), std::to_string(shape.h), std::to_string(shape.w)});
    if (!classifier_dir.empty()) kv.add_scalar("classifier_dir", classifier_dir);
    kv.add_int("hidden", hidden);
    kv.add_int("epochs", epochs);
    kv.add_double("learning_rate", learning_rate);
    if (!model_file.empty()) kv.add_scalar("model_file", model_file);
    kv.add_scalar("stencil", stencil);
    kv.add_int("fit_images", fit_images);
    kv.add_int("fit_directions", fit_directions);
    kv.add_double("fit_delta", fit_delta);
    kv.add_doubles("epsilons", epsilons);
    std::vector<double> b(budgets.begin(), budgets.end());
    kv.add_doubles("budgets", b);
    kv.add("variants", std::vector<std::string>(variants));
    kv.add_scalar("direction_source", direction_source);
    kv.add_scalar("basis_kind", basis_kind);
    kv.add_double("sigma2", sigma2);
    kv.add_double("delta1", delta1);
    kv.add_int("max_images", max_images);
    return kv;
}

void ExperimentConfig::validate() const {
    if (budgets.empty()) throw ConfigError("config: budgets must be non-empty");
    if (!std::is_sorted(budgets.begin(), budgets.end()))
        throw ConfigError("config: budgets must be sorted ascending");
    for (int b : budgets)
        if (b < 1) throw ConfigError("config: budgets must be >= 1");
    if (epsilons.empty()) throw ConfigError("config: epsilons must be non-empty");
    for (double e : epsilons)
        if (e < 0.0) throw ConfigError("config: epsilons must be >= 0");
    if (direction_source != "fft-basis" && direction_source != "gaussian")
        throw ConfigError("config: direction_source must be fft-basis or gaussian");
    if (basis_kind != "cos" && basis_kind != "cos+sin")
        throw ConfigError("config: basis_kind must be cos or cos+sin");
    if (!(sigma2 > 0.0)) throw ConfigError("config: sigma2 must be > 0");
    if (!(delta1 > 0.0)) throw ConfigError("config: delta1 must be > 0");
    if (!(fit_delta > 0.0)) throw ConfigError("config: fit_delta must be > 0");
    if (fit_images < 1 || fit_directions < 1)
        throw ConfigError("config: fit_images and fit_directions must be >= 1");
    for (const auto& v : variants)
        if (v != "gmrf" && v != "identity" && v != "rdsa" && v != "white-box")
            throw ConfigError("config: unknown attack variant '" + v + "'");
    if (!dataset_dir.empty() && !std::filesystem::exists(dataset_dir))
        throw ConfigError("config: dataset_dir does not exist: " + dataset_dir);
    if (!classifier_dir.empty() && !std::filesystem::exists(classifier_dir))
        throw ConfigError("config: classifier_dir does not exist: " + classifier_dir);
    if (!model_file.empty() && !std::filesystem::exists(model_file))
        throw ConfigError("config: model_file does not exist: " + model_file);
}

std::string MetricsTable::to_csv() const {
    std::ostringstream os;
    os << "attack,epsilon,budget,success_rate,avg_queries_successful,mean_cosine,"
          "mean_mse_normalized,image_count\n";
    for (const auto& r : rows) {
        os << r.attack << ',' << fmt(r.epsilon) << ',' << r.budget << ',' << fmt(r.success_rate)
           << ',' << fmt(r.avg_queries_successful) << ',' << fmt(r.mean_cosine) << ','
           << fmt(r.mean_mse) << ',' << r.image_count << '\n';
    }
    return os.str();
}

void write_manifest(const std::string& dir, const std::string& command,
                    const ExperimentConfig& cfg) {
    std::filesystem::create_directories(dir);
    KvFile manifest;
    manifest.add_scalar("command", command);
    manifest.add_scalar("version", kVersion);
    manifest.add_int("seed", static_cast<long long>(cfg.seed));
    char hash[24];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.to_kv().to_string())));
    manifest.add_scalar("config_hash", hash);
    manifest.save(dir + "/manifest.kv");
}

Dataset obtain_dataset(const ExperimentConfig& cfg) {
    if (!cfg.dataset_dir.empty()) return load_dataset(cfg.dataset_dir);
    return make_synthetic_dataset(cfg.dataset_kind, static_cast<std::size_t>(cfg.dataset_size),
                                  cfg.shape, cfg.seed);
}

TrainResult obtain_classifier(const ExperimentConfig& cfg, const Dataset& ds) {
    if (!cfg.classifier_dir.empty()) {
        TrainResult r;
        r.classifier = ToyClassifier::load(cfg.classifier_dir);
        std::size_t train_ok = 0, test_ok = 0;
        const auto train_idx = ds.train_indices();
        const auto test_idx = ds.test_indices();
        for (std::size_t i : train_idx)
            if (r.classifier.predict(ds.images[i]) == ds.labels[i]) ++train_ok;
        for (std::size_t i : test_idx)
            if (r.classifier.predict(ds.images[i]) == ds.labels[i]) ++test_ok;
        r.train_accuracy = train_idx.empty() ? 0.0 : static_cast<double>(train_ok) / train_idx.size();
        r.test_accuracy = test_idx.empty() ? 0.0 : static_cast<double>(test_ok) / test_idx.size();
        return r;
    }
    TrainOptions opts;
    opts.hidden = cfg.hidden;
    opts.epochs = cfg.epochs;
    opts.learning_rate = cfg.learning_rate;
    return train_toy(ds, opts, cfg.seed);
}

namespace {

struct Pool {
    // last fit_images of the test split are the held-out fitting images;
    // the attack pool is the remaining initially-correct test images
    std::vector<std::size_t> fitting;
    std::vector<std::size_t> attack;
};

Pool split_pool(const Dataset& ds, const ToyClassifier& clf, const ExperimentConfig& cfg) {
    const auto test_idx = ds.test_indices();
    if (static_cast<int>(test_idx.size()) <= cfg.fit_images)
        throw ConfigError("attack pool is empty: test split smaller than fit_images");
    Pool pool;
    pool.fitting.assign(test_idx.end() - cfg.fit_images, test_idx.end());
    for (std::size_t k = 0; k + static_cast<std::size_t>(cfg.fit_images) < test_idx.size(); ++k) {
        const std::size_t i = test_idx[k];
        if (clf.predict(ds.images[i]) == ds.labels[i]) pool.attack.push_back(i);
    }
    if (cfg.max_images > 0 && static_cast<int>(pool.attack.size()) > cfg.max_images)
        pool.attack.resize(static_cast<std::size_t>(cfg.max_images));
    return pool;
}

FitReport fit_from_pool(const Dataset& ds, const ToyClassifier& clf, const Pool& pool,
                        const ExperimentConfig& cfg, std::uint64_t* queries_out) {
    ClassifierOracle oracle(clf);
    std::vector<TensorGrid> images;
    std::vector<int> labels;
    for (std::size_t i : pool.fitting) {
        images.push_back(ds.images[i]);
        labels.push_back(ds.labels[i]);
    }
    GradientSampleSet samples = collect_samples(oracle, images, labels, cfg.fit_directions,
                                                cfg.fit_delta, cfg.seed ^ 0xf17f17ULL);
    if (queries_out) *queries_out = oracle.queries_used();
    return fit(samples, StencilSpec::by_name(cfg.stencil));
}

}  // namespace

FitRunResult run_fit(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = obtain_dataset(cfg);
    const TrainResult trained = obtain_classifier(cfg, ds);
    const Pool pool = split_pool(ds, trained.classifier, cfg);

    FitRunResult result;
    result.report = fit_from_pool(ds, trained.classifier, pool, cfg, &result.fit_queries);
    result.attack_pool_size = static_cast<int>(pool.attack.size());
    result.amortized_queries_per_image =
        result.attack_pool_size > 0
            ? static_cast<double>(result.fit_queries) / result.attack_pool_size
            : 0.0;

    const StencilSpec spec = StencilSpec::by_name(cfg.stencil);
    save_model_file(cfg.out_dir + "/model.kv", spec, result.report.theta, cfg.sigma2, cfg.delta1);
    save_fit_report(cfg.out_dir + "/fit_report.kv", result.report, spec);
    KvFile amort;
    amort.add_int("fit.queries", static_cast<long long>(result.fit_queries));
    amort.add_int("fit.pool_size", result.attack_pool_size);
    amort.add_double("fit.amortized_queries_per_image", result.amortized_queries_per_image);
    amort.save(cfg.out_dir + "/fit_amortization.kv");
    write_manifest(cfg.out_dir, "fit-gmrf", cfg);
    return result;
}

namespace {

struct ImageRecord {
    std::size_t image{0};
    bool success{false};
    bool degenerate{false};
    std::uint64_t queries{0};
    GradientDiagnostics diag;
    std::string error;  // non-empty on per-image failure
};

ImageRecord attack_one(const std::string& variant, const Dataset& ds, const ToyClassifier& clf,
                       std::size_t image_idx, double epsilon, int budget,
                       const ExperimentConfig& cfg,
                       const std::shared_ptr<const GmrfModel>& gmrf_model,
                       const std::shared_ptr<const GmrfModel>& identity_model) {
    ImageRecord rec;
    rec.image = image_idx;
    const TensorGrid& x = ds.images[image_idx];
    const int y = ds.labels[image_idx];
    const TensorGrid truth = clf.input_gradient(x, y);
    // per-image stream: independent of thread scheduling and epsilon
    std::uint64_t stream = image_idx * 1315423911ULL + static_cast<std::uint64_t>(budget) * 2654435761ULL;
    for (char ch : variant) stream = stream * 131 + static_cast<unsigned char>(ch);

    try {
        ClassifierOracle oracle(clf);
        AttackOutcome outcome;
        if (variant == "white-box") {
            outcome = white_box_fgsm(clf, x, y, epsilon);
        } else if (variant == "rdsa") {
            outcome = rdsa_fgsm(oracle, x, y, epsilon, budget, cfg.fit_delta,
                                Rng(cfg.seed).fork(stream).seed());
        } else {
            AttackConfig acfg;
            acfg.epsilon = epsilon;
            acfg.budget = budget;
            acfg.delta1 = cfg.delta1;
            acfg.sigma2 = cfg.sigma2;
            acfg.directions = cfg.direction_source == "gaussian" ? DirectionSource::Gaussian
                                                                 : DirectionSource::FftBasis;
            acfg.basis_kind =
                cfg.basis_kind == "cos+sin" ? BasisKind::CosineSine : BasisKind::CosineOnly;
            acfg.model = variant == "identity" ? identity_model : gmrf_model;
            acfg.rng_seed = Rng(cfg.seed).fork(stream).seed();
            outcome = bb_fgsm(oracle, x, y, acfg);
        }
        rec.success = outcome.success;
        rec.degenerate = outcome.degenerate;
        rec.queries = outcome.queries_used;
        rec.diag = gradient_diagnostics(truth, outcome.estimated_gradient);
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

AttackRunResult run_attack(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = obtain_dataset(cfg);
    const TrainResult trained = obtain_classifier(cfg, ds);
    if (trained.test_accuracy < 0.9)
        throw ConfigError("attack: classifier test accuracy " + fmt(trained.test_accuracy) +
                          " is below the required 0.9 gate");
    const ToyClassifier& clf = trained.classifier;
    const Pool pool = split_pool(ds, clf, cfg);
    if (pool.attack.empty()) throw ConfigError("attack: no initially-correct pool images");

    AttackRunResult result;
    result.pool_size = static_cast<int>(pool.attack.size());

    // model: from file when given, otherwise fitted on the held-out images
    StencilSpec spec = StencilSpec::by_name(cfg.stencil);
    ParamVector theta;
    if (!cfg.model_file.empty()) {
        ModelFile mf = load_model_file(cfg.model_file);
        spec = mf.spec;
        theta = mf.theta;
    } else {
        FitReport report = fit_from_pool(ds, clf, pool, cfg, &result.fit_queries);
        theta = report.theta;
    }
    result.amortized_queries_per_image =
        static_cast<double>(result.fit_queries) / result.pool_size;

    const auto gmrf_model = GmrfModel::build_shared(spec, theta, ds.shape);
    const auto identity_model =
        GmrfModel::build_shared(StencilSpec::identity(), ParamVector{1.0}, ds.shape);

    nlohmann::json outcomes = nlohmann::json::array();
    for (const std::string& variant : cfg.variants) {
        for (double epsilon : cfg.epsilons) {
            for (int budget : cfg.budgets) {
                std::vector<ImageRecord> records(pool.attack.size());
                const long long npool = static_cast<long long>(pool.attack.size());
#pragma omp parallel for schedule(dynamic)
                for (long long k = 0; k < npool; ++k)
                    records[static_cast<std::size_t>(k)] =
                        attack_one(variant, ds, clf, pool.attack[static_cast<std::size_t>(k)],
                                   epsilon, budget, cfg, gmrf_model, identity_model);

                MetricsRow row;
                row.attack = variant;
                row.epsilon = epsilon;
                row.budget = budget;
                std::size_t ok = 0, successes = 0, diag_count = 0;
                std::uint64_t queries_successful = 0;
                double cos_sum = 0.0, mse_sum = 0.0;
                for (const auto& rec : records) {
                    if (!rec.error.empty()) {
                        ++result.partial_failures;
                        continue;
                    }
                    ++ok;
                    if (rec.success) {
                        ++successes;
                        queries_successful += rec.queries;
                    }
                    if (rec.diag.available) {
                        ++diag_count;
                        cos_sum += rec.diag.cosine;
                        mse_sum += rec.diag.mse_normalized;
                    }
                }
                row.image_count = static_cast<int>(ok);
                row.success_rate = ok ? static_cast<double>(successes) / ok : 0.0;
                row.avg_queries_successful =
                    successes ? static_cast<double>(queries_successful) / successes : 0.0;
                row.mean_cosine = diag_count ? cos_sum / diag_count : 0.0;
                row.mean_mse = diag_count ? mse_sum / diag_count : 0.0;
                result.metrics.rows.push_back(row);

                for (const auto& rec : records) {
                    nlohmann::json j{{"attack", variant}, {"epsilon", epsilon},
                                     {"budget", budget},  {"image", rec.image},
                                     {"success", rec.success}, {"queries", rec.queries},
                                     {"degenerate", rec.degenerate}};
                    if (rec.diag.available) {
                        j["cosine"] = rec.diag.cosine;
                        j["mse_normalized"] = rec.diag.mse_normalized;
                    }
                    if (!rec.error.empty()) j["error"] = rec.error;
                    outcomes.push_back(std::move(j));
                }
            }
        }
    }

    std::ofstream csv(cfg.out_dir + "/metrics.csv", std::ios::binary);
    csv << result.metrics.to_csv();
    std::ofstream jsonl(cfg.out_dir + "/outcomes.jsonl", std::ios::binary);
    for (const auto& j : outcomes) jsonl << j.dump() << '\n';
    write_manifest(cfg.out_dir, "attack", cfg);
    return result;
}

GradCheckResult run_gradcheck(const ExperimentConfig& cfg, int budget) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = obtain_dataset(cfg);
    const TrainResult trained = obtain_classifier(cfg, ds);
    if (trained.test_accuracy < 0.9)
        throw ConfigError("grad-check: classifier test accuracy below the required 0.9 gate");
    const ToyClassifier& clf = trained.classifier;
    const Pool pool = split_pool(ds, clf, cfg);

    StencilSpec spec = StencilSpec::by_name(cfg.stencil);
    ParamVector theta;
    if (!cfg.model_file.empty()) {
        ModelFile mf = load_model_file(cfg.model_file);
        spec = mf.spec;
        theta = mf.theta;
    } else {
        theta = fit_from_pool(ds, clf, pool, cfg, nullptr).theta;
    }
    const auto model = GmrfModel::build_shared(spec, theta, ds.shape);
    const auto identity_model =
        GmrfModel::build_shared(StencilSpec::identity(), ParamVector{1.0}, ds.shape);

    std::vector<ImageRecord> records(pool.attack.size());
    const long long npool = static_cast<long long>(pool.attack.size());
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < npool; ++k)
        records[static_cast<std::size_t>(k)] =
            attack_one("gmrf", ds, clf, pool.attack[static_cast<std::size_t>(k)],
                       cfg.epsilons.front(), budget, cfg, model, identity_model);

    std::ofstream csv(cfg.out_dir + "/gradcheck.csv", std::ios::binary);
    csv << "image,cosine,mse_normalized\n";
    GradCheckResult result;
    for (const auto& rec : records) {
        if (!rec.error.empty() || !rec.diag.available) continue;
        csv << rec.image << ',' << fmt(rec.diag.cosine) << ',' << fmt(rec.diag.mse_normalized)
            << '\n';
        result.mean_cosine += rec.diag.cosine;
        result.mean_mse += rec.diag.mse_normalized;
        ++result.image_count;
    }
    if (result.image_count > 0) {
        result.mean_cosine /= result.image_count;
        result.mean_mse /= result.image_count;
    }
    KvFile summary;
    summary.add_int("gradcheck.budget", budget);
    summary.add_int("gradcheck.images", result.image_count);
    summary.add_double("gradcheck.mean_cosine", result.mean_cosine);
    summary.add_double("gradcheck.mean_mse_normalized", result.mean_mse);
    summary.save(cfg.out_dir + "/gradcheck_summary.kv");
    write_manifest(cfg.out_dir, "grad-check", cfg);
    return result;
}

void run_autocorr(const std::vector<TensorGrid>& gradients, int window, bool circular,
                  const std::string& out_path) {
    const auto maps = autocorrelation(
        gradients, window, circular ? AutocorrMode::Circular : AutocorrMode::ValidRegion);
    std::ofstream csv(out_path, std::ios::binary);
    if (!csv) throw ConfigError("autocorr: cannot open " + out_path);
    csv << "channel,dy,dx,r\n";
    const int radius = window / 2;
    for (std::size_t ch = 0; ch < maps.size(); ++ch)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx)
                csv << ch << ',' << dy << ',' << dx << ','
                    << fmt(maps[ch][static_cast<std::size_t>(dy + radius) * window +
                                    (dx + radius)])
                    << '\n';
}

}  // namespace gradmrf
