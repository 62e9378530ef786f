// Command-line front end: dataset/model preparation, GMRF fitting, batch
// attack experiments, autocorrelation, gradient diagnostics, and tensor
// export. Exit codes: 0 full success, 2 partial per-image failures,
// 1 configuration errors.

#include <cstdio>
#include <filesystem>
#include <vector>

#include <CLI11.hpp>

#include "gradmrf/experiment.hpp"
#include "gradmrf/posterior.hpp"
#include "gradmrf/version.hpp"

namespace fs = std::filesystem;
using namespace gradmrf;

namespace {

struct GlobalArgs {
    std::uint64_t seed = 1234;
    std::string out_dir = "out";
    std::string config_file;
};

ExperimentConfig build_config(const GlobalArgs& g) {
    ExperimentConfig cfg;
    if (!g.config_file.empty()) cfg = ExperimentConfig::from_kv(KvFile::load(g.config_file));
    cfg.seed = g.seed;
    cfg.out_dir = g.out_dir;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GMRF gradient modeling and black-box FGSM experiment harness"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--seed", g.seed, "Global RNG seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--config", g.config_file, "Key-value config file (CLI flags override)");

    // make-dataset
    auto* make_ds = app.add_subcommand("make-dataset", "Generate a synthetic dataset");
    std::string ds_kind = "bars";
    int ds_count = 800;
    std::vector<int> ds_shape{1, 16, 16};
    make_ds->add_option("--kind", ds_kind, "bars | blobs")->capture_default_str();
    make_ds->add_option("--count", ds_count)->capture_default_str();
    make_ds->add_option("--shape", ds_shape, "c h w")->expected(3);

    // train-toy
    auto* train = app.add_subcommand("train-toy", "Train the toy classifier");
    std::string train_dataset;
    int train_hidden = 32, train_epochs = 200;
    double train_lr = 0.5;
    train->add_option("--dataset", train_dataset, "Dataset directory (else synthetic)");
    train->add_option("--hidden", train_hidden, "Hidden width, 0 = softmax regression")
        ->capture_default_str();
    train->add_option("--epochs", train_epochs)->capture_default_str();
    train->add_option("--lr", train_lr)->capture_default_str();

    // fit-gmrf
    auto* fit_cmd = app.add_subcommand("fit-gmrf", "Fit GMRF parameters from oracle queries");
    std::string fit_dataset, fit_classifier, fit_stencil = "eight-neighbor";
    int fit_m = 10, fit_n = 10;
    double fit_delta = 0.1;
    fit_cmd->add_option("--dataset", fit_dataset);
    fit_cmd->add_option("--classifier", fit_classifier);
    fit_cmd->add_option("--stencil", fit_stencil,
                        "identity | four-neighbor | eight-neighbor | three-channel | ring2")
        ->capture_default_str();
    fit_cmd->add_option("--images", fit_m, "Fitting images m")->capture_default_str();
    fit_cmd->add_option("--directions", fit_n, "Directions per image n")->capture_default_str();
    fit_cmd->add_option("--delta", fit_delta, "Finite-difference step")->capture_default_str();

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "Run the attack grid and write metrics");
    std::string atk_dataset, atk_classifier, atk_model;
    std::vector<double> atk_eps;
    std::vector<int> atk_budgets;
    std::vector<std::string> atk_variants;
    std::string atk_dirsrc, atk_basis;
    double atk_sigma2 = -1.0, atk_delta1 = -1.0;
    int atk_max_images = -1;
    attack_cmd->add_option("--dataset", atk_dataset);
    attack_cmd->add_option("--classifier", atk_classifier);
    attack_cmd->add_option("--model", atk_model, "Fitted model file (else fits in-run)");
    attack_cmd->add_option("--epsilons", atk_eps, "l_inf bounds");
    attack_cmd->add_option("--budgets", atk_budgets, "Query budgets, ascending");
    attack_cmd->add_option("--variants", atk_variants, "gmrf identity rdsa white-box");
    attack_cmd->add_option("--direction-source", atk_dirsrc, "fft-basis | gaussian");
    attack_cmd->add_option("--basis-kind", atk_basis, "cos | cos+sin");
    attack_cmd->add_option("--sigma2", atk_sigma2);
    attack_cmd->add_option("--delta1", atk_delta1);
    attack_cmd->add_option("--max-images", atk_max_images);

    // autocorr
    auto* autocorr_cmd = app.add_subcommand("autocorr", "Gradient autocorrelation map");
    std::string ac_dataset, ac_classifier, ac_gradients;
    int ac_window = 9;
    bool ac_circular = false;
    autocorr_cmd->add_option("--dataset", ac_dataset, "White-box gradients of this dataset");
    autocorr_cmd->add_option("--classifier", ac_classifier);
    autocorr_cmd->add_option("--gradients", ac_gradients, "Directory of .gtz gradient files");
    autocorr_cmd->add_option("--window", ac_window, "Odd window size")->capture_default_str();
    autocorr_cmd->add_flag("--circular", ac_circular, "Circular estimator (default valid-region)");

    // grad-check
    auto* gradcheck_cmd = app.add_subcommand("grad-check", "Estimated-gradient diagnostics");
    std::string gc_dataset, gc_classifier, gc_model;
    int gc_budget = 50;
    gradcheck_cmd->add_option("--dataset", gc_dataset);
    gradcheck_cmd->add_option("--classifier", gc_classifier);
    gradcheck_cmd->add_option("--model", gc_model);
    gradcheck_cmd->add_option("--budget", gc_budget)->capture_default_str();

    // gen-basis
    auto* basis_cmd = app.add_subcommand("gen-basis", "Dump FFT basis vectors as GTZ1 files");
    std::vector<int> basis_shape{1, 16, 16};
    int basis_count = 16;
    std::string basis_kind = "cos";
    basis_cmd->add_option("--shape", basis_shape, "c h w")->expected(3);
    basis_cmd->add_option("--count", basis_count)->capture_default_str();
    basis_cmd->add_option("--kinds", basis_kind, "cos | cos+sin")->capture_default_str();

    // sample-prior
    auto* sample_cmd = app.add_subcommand("sample-prior", "Draw from a GMRF prior");
    std::string sp_model, sp_preset;
    std::vector<int> sp_shape{1, 16, 16};
    int sp_count = 16;
    sample_cmd->add_option("--model", sp_model, "Fitted model file");
    sample_cmd->add_option("--preset", sp_preset, "identity | mnist | vgg16 | resnet50 | inception-v3");
    sample_cmd->add_option("--shape", sp_shape, "c h w")->expected(3);
    sample_cmd->add_option("--count", sp_count)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg = build_config(g);

        if (make_ds->parsed()) {
            cfg.dataset_kind = ds_kind;
            cfg.dataset_size = ds_count;
            cfg.shape = {ds_shape[0], ds_shape[1], ds_shape[2]};
            Dataset ds = make_synthetic_dataset(cfg.dataset_kind,
                                                static_cast<std::size_t>(cfg.dataset_size),
                                                cfg.shape, cfg.seed);
            save_dataset(ds, cfg.out_dir + "/dataset");
            write_manifest(cfg.out_dir, "make-dataset", cfg);
            std::printf("wrote %zu images to %s/dataset\n", ds.size(), cfg.out_dir.c_str());
            return 0;
        }

        if (train->parsed()) {
            if (!train_dataset.empty()) cfg.dataset_dir = train_dataset;
            cfg.hidden = train_hidden;
            cfg.epochs = train_epochs;
            cfg.learning_rate = train_lr;
            cfg.validate();
            Dataset ds = obtain_dataset(cfg);
            TrainOptions opts;
            opts.hidden = cfg.hidden;
            opts.epochs = cfg.epochs;
            opts.learning_rate = cfg.learning_rate;
            TrainResult r = train_toy(ds, opts, cfg.seed);
            r.classifier.save(cfg.out_dir + "/classifier");
            KvFile report;
            report.add_double("train_accuracy", r.train_accuracy);
            report.add_double("test_accuracy", r.test_accuracy);
            report.add_doubles("loss_trace", r.loss_trace);
            report.save(cfg.out_dir + "/training_report.kv");
            write_manifest(cfg.out_dir, "train-toy", cfg);
            std::printf("train accuracy %.4f, test accuracy %.4f\n", r.train_accuracy,
                        r.test_accuracy);
            return 0;
        }

        if (fit_cmd->parsed()) {
            if (!fit_dataset.empty()) cfg.dataset_dir = fit_dataset;
            if (!fit_classifier.empty()) cfg.classifier_dir = fit_classifier;
            cfg.stencil = fit_stencil;
            cfg.fit_images = fit_m;
            cfg.fit_directions = fit_n;
            cfg.fit_delta = fit_delta;
            FitRunResult r = run_fit(cfg);
            std::printf("fitted theta:");
            for (double t : r.report.theta) std::printf(" %g", t);
            std::printf("\nfit queries %llu, amortized %.4f queries/image over %d pool images\n",
                        static_cast<unsigned long long>(r.fit_queries),
                        r.amortized_queries_per_image, r.attack_pool_size);
            return 0;
        }

        if (attack_cmd->parsed()) {
            if (!atk_dataset.empty()) cfg.dataset_dir = atk_dataset;
            if (!atk_classifier.empty()) cfg.classifier_dir = atk_classifier;
            if (!atk_model.empty()) cfg.model_file = atk_model;
            if (!atk_eps.empty()) cfg.epsilons = atk_eps;
            if (!atk_budgets.empty()) cfg.budgets = atk_budgets;
            if (!atk_variants.empty()) cfg.variants = atk_variants;
            if (!atk_dirsrc.empty()) cfg.direction_source = atk_dirsrc;
            if (!atk_basis.empty()) cfg.basis_kind = atk_basis;
            if (atk_sigma2 > 0) cfg.sigma2 = atk_sigma2;
            if (atk_delta1 > 0) cfg.delta1 = atk_delta1;
            if (atk_max_images >= 0) cfg.max_images = atk_max_images;
            AttackRunResult r = run_attack(cfg);
            std::printf("%s", r.metrics.to_csv().c_str());
            std::printf("pool %d images, %d partial failures\n", r.pool_size,
                        r.partial_failures);
            return r.partial_failures > 0 ? 2 : 0;
        }

        if (autocorr_cmd->parsed()) {
            std::vector<TensorGrid> gradients;
            if (!ac_gradients.empty()) {
                std::vector<fs::path> files;
                for (const auto& entry : fs::directory_iterator(ac_gradients))
                    if (entry.path().extension() == ".gtz") files.push_back(entry.path());
                std::sort(files.begin(), files.end());
                for (const auto& p : files) gradients.push_back(read_gtz(p.string()));
                if (gradients.empty())
                    throw ConfigError("autocorr: no .gtz files in " + ac_gradients);
            } else {
                if (!ac_dataset.empty()) cfg.dataset_dir = ac_dataset;
                if (!ac_classifier.empty()) cfg.classifier_dir = ac_classifier;
                cfg.validate();
                Dataset ds = obtain_dataset(cfg);
                TrainResult r = obtain_classifier(cfg, ds);
                for (std::size_t i : ds.test_indices())
                    gradients.push_back(
                        r.classifier.input_gradient(ds.images[i], ds.labels[i]));
            }
            fs::create_directories(cfg.out_dir);
            run_autocorr(gradients, ac_window, ac_circular, cfg.out_dir + "/autocorr.csv");
            write_manifest(cfg.out_dir, "autocorr", cfg);
            std::printf("wrote %s/autocorr.csv from %zu gradients\n", cfg.out_dir.c_str(),
                        gradients.size());
            return 0;
        }

        if (gradcheck_cmd->parsed()) {
            if (!gc_dataset.empty()) cfg.dataset_dir = gc_dataset;
            if (!gc_classifier.empty()) cfg.classifier_dir = gc_classifier;
            if (!gc_model.empty()) cfg.model_file = gc_model;
            GradCheckResult r = run_gradcheck(cfg, gc_budget);
            std::printf("grad-check over %d images: mean cosine %.4f, mean normalized MSE %.6f\n",
                        r.image_count, r.mean_cosine, r.mean_mse);
            return 0;
        }

        if (basis_cmd->parsed()) {
            const Shape3 shape{basis_shape[0], basis_shape[1], basis_shape[2]};
            const BasisKind kinds =
                basis_kind == "cos+sin" ? BasisKind::CosineSine : BasisKind::CosineOnly;
            const auto vectors =
                low_frequency_sequence(shape, static_cast<std::size_t>(basis_count), kinds);
            fs::create_directories(cfg.out_dir + "/basis");
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "basis_%04zu.gtz", i);
                write_gtz(cfg.out_dir + "/basis/" + name, vectors[i]);
            }
            write_manifest(cfg.out_dir, "gen-basis", cfg);
            std::printf("wrote %zu basis vectors to %s/basis\n", vectors.size(),
                        cfg.out_dir.c_str());
            return 0;
        }

        if (sample_cmd->parsed()) {
            const Shape3 shape{sp_shape[0], sp_shape[1], sp_shape[2]};
            StencilSpec spec = StencilSpec::identity();
            ParamVector theta{1.0};
            if (!sp_model.empty()) {
                ModelFile mf = load_model_file(sp_model);
                spec = mf.spec;
                theta = mf.theta;
            } else if (!sp_preset.empty()) {
                ModelPreset p = preset(sp_preset);
                spec = p.spec;
                theta = p.theta;
            }
            const auto model = GmrfModel::build_shared(spec, theta, shape);
            fs::create_directories(cfg.out_dir + "/prior_samples");
            for (int i = 0; i < sp_count; ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "sample_%04d.gtz", i);
                write_gtz(cfg.out_dir + "/prior_samples/" + name,
                          model->sample_prior(cfg.seed + static_cast<std::uint64_t>(i)));
            }
            write_manifest(cfg.out_dir, "sample-prior", cfg);
            std::printf("wrote %d prior samples to %s/prior_samples\n", sp_count,
                        cfg.out_dir.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
