// nirsgaf — fNIRS ternary task classification (MI / MA / IS) via Gramian
// angular field images and a small CNN, plus windowed-mean feature baselines.
//
// Subcommands mirror the pipeline stages; `pipeline run` chains them all
// from one JSON config. Exit codes: 0 ok, 2 config error, 3 data error,
// 4 numeric error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nirsgaf/baselines.hpp"
#include "nirsgaf/csvio.hpp"
#include "nirsgaf/cv.hpp"
#include "nirsgaf/errors.hpp"
#include "nirsgaf/features.hpp"
#include "nirsgaf/gaf.hpp"
#include "nirsgaf/ingest.hpp"
#include "nirsgaf/model_io.hpp"
#include "nirsgaf/pipeline.hpp"
#include "nirsgaf/preprocess.hpp"
#include "nirsgaf/rng.hpp"

namespace fs = std::filesystem;
using namespace nirsgaf;

namespace {

struct ImageSet {
    Tensor x;  // [N, 1, n, n]
    std::vector<int> y;
};

// Reads a directory written by `gaf encode`: labels.csv (image_file,task)
// plus one matrix CSV per trial.
ImageSet load_images_dir(const std::string& dir) {
    const std::string index_path = dir + "/labels.csv";
    std::ifstream in(index_path);
    if (!in) throw IoError("cannot read " + index_path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(index_path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv::split_line(line);
    if (header.size() != 2 || header[0] != "image_file" || header[1] != "task")
        throw DataError(index_path + ": expected header image_file,task");

    std::vector<std::pair<std::string, int>> entries;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = csv::split_line(line);
        if (cells.size() != 2) throw DataError(index_path + ": malformed row '" + line + "'");
        entries.emplace_back(cells[0], static_cast<int>(task_from_name(cells[1])));
    }
    if (entries.empty()) throw EmptyDataset(index_path + ": no images listed");

    ImageSet set;
    std::size_t n = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const gaf::GafImage img = gaf::import_image_csv(dir + "/" + entries[i].first);
        if (i == 0) {
            n = img.n;
            set.x = Tensor({entries.size(), 1, n, n});
        } else if (img.n != n) {
            throw ShapeMismatch(entries[i].first + ": image is " + std::to_string(img.n) +
                                "x" + std::to_string(img.n) + ", expected " + std::to_string(n));
        }
        std::copy(img.matrix.begin(), img.matrix.end(), set.x.data.begin() + i * n * n);
        set.y.push_back(entries[i].second);
    }
    return set;
}

void write_report(const std::string& path, const eval::MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << report.to_json_text() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

std::string require(const std::string& value, const char* what) {
    if (value.empty()) throw ConfigError(std::string(what) + " is required");
    return value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fNIRS task classification: GAF image encoding + CNN, with feature baselines"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    std::string config_path;
    std::string out_path;
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_path, "Output file or directory");

    // --- synth --------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate one synthetic labeled recording");
    synth->fallthrough();
    ingest::SynthesisConfig synth_cfg;
    synth->add_option("--subject", synth_cfg.subject_id, "Subject id")->capture_default_str();
    synth->add_option("--trials-per-class", synth_cfg.n_trials_per_class, "Trials per task")
        ->capture_default_str();
    synth->add_option("--channels", synth_cfg.n_channels, "Channel count")->capture_default_str();
    synth->add_option("--rate", synth_cfg.sample_rate_hz, "Sample rate (Hz)")
        ->capture_default_str();
    synth->add_option("--noise-sd", synth_cfg.noise_sd, "White noise sd")->capture_default_str();
    synth->add_option("--drift", synth_cfg.drift_amplitude, "Drift amplitude")
        ->capture_default_str();
    synth->add_option("--iti", synth_cfg.inter_trial_s, "Mean inter-trial interval (s)")
        ->capture_default_str();
    synth->add_option("--jitter", synth_cfg.iti_jitter_s, "Onset jitter (s)")
        ->capture_default_str();
    synth->callback([&] {
        synth_cfg.seed = seed;
        const Recording rec = ingest::synthesize_recording(synth_cfg);
        ingest::write_recording_dir(require(out_path, "--out"), rec);
        std::cout << "wrote " << out_path << ": " << rec.n_samples() << " samples, "
                  << rec.channels.size() << " channels, " << rec.markers.size() << " trials\n";
    });

    // --- ingest validate ----------------------------------------------------
    auto* ingest_cmd = app.add_subcommand("ingest", "Recording I/O checks");
    ingest_cmd->require_subcommand(1);
    ingest_cmd->fallthrough();
    auto* validate = ingest_cmd->add_subcommand("validate", "Load a recording and validate it");
    validate->fallthrough();
    std::string rec_dir;
    validate->add_option("--dir", rec_dir, "Recording directory")->required();
    validate->callback([&] {
        const Recording rec = ingest::load_recording_dir(rec_dir);
        rec.validate();
        std::cout << "ok: subject=" << rec.subject_id << " samples=" << rec.n_samples()
                  << " channels=" << rec.channels.size() << " markers=" << rec.markers.size()
                  << " rate=" << rec.sample_rate_hz << "\n";
    });

    // --- preprocess run -----------------------------------------------------
    auto* preprocess_cmd = app.add_subcommand("preprocess", "OD -> Hb, band-pass, epochs");
    preprocess_cmd->require_subcommand(1);
    preprocess_cmd->fallthrough();
    auto* prep_run = preprocess_cmd->add_subcommand("run", "Preprocess one recording to epochs");
    prep_run->fallthrough();
    std::string prep_dir, coefficients = "identity";
    preprocess::FilterSpec filter_spec;
    prep_run->add_option("--dir", prep_dir, "Recording directory")->required();
    prep_run->add_option("--coefficients", coefficients,
                         "Beer-Lambert coefficients JSON, or 'identity'")
        ->capture_default_str();
    prep_run->add_option("--order", filter_spec.order, "Butterworth order")
        ->capture_default_str();
    prep_run->add_option("--low", filter_spec.passband_low_hz, "Passband low edge (Hz)")
        ->capture_default_str();
    prep_run->add_option("--high", filter_spec.passband_high_hz, "Passband high edge (Hz)")
        ->capture_default_str();
    prep_run->callback([&] {
        const auto coeff = preprocess::BeerLambertCoefficients::load(coefficients);
        const Recording rec = ingest::load_recording_dir(prep_dir);
        const auto epochs = preprocess::preprocess_recording(rec, coeff, filter_spec);
        preprocess::write_epochs_dir(require(out_path, "--out"), epochs);
        std::cout << "wrote " << epochs.size() << " epochs to " << out_path << "\n";
    });

    // --- features extract / importance --------------------------------------
    auto* features_cmd = app.add_subcommand("features", "Windowed-mean features");
    features_cmd->require_subcommand(1);
    features_cmd->fallthrough();

    auto* feat_extract = features_cmd->add_subcommand("extract", "Epoch dir -> feature CSV");
    feat_extract->fallthrough();
    std::string feat_epochs;
    feat_extract->add_option("--epochs", feat_epochs, "Epoch directory")->required();
    feat_extract->callback([&] {
        const auto epochs = preprocess::read_epochs_dir(feat_epochs);
        const auto fm = features::feature_matrix(epochs);
        features::write_features_csv(require(out_path, "--out"), fm);
        std::cout << "wrote " << fm.X.shape[0] << " x " << fm.X.shape[1] << " features to "
                  << out_path << "\n";
    });

    auto* feat_importance =
        features_cmd->add_subcommand("importance", "Permutation importance + channel selection");
    feat_importance->fallthrough();
    std::string feat_csv, selected_out;
    std::size_t repeats = 10;
    feat_importance->add_option("--features", feat_csv, "Feature CSV")->required();
    feat_importance->add_option("--repeats", repeats, "Shuffles per feature")
        ->capture_default_str();
    feat_importance->add_option("--selected-out", selected_out,
                                "Also write the selected channel id to this file");
    feat_importance->callback([&] {
        const auto fm = features::read_features_csv(feat_csv);
        const auto model = baselines::train_logreg(fm.X, fm.y, 1e-4, 0.1, 500);
        const features::PredictFn predict = [&model](const Tensor& x) { return model.predict(x); };
        const auto report = features::permutation_importance(predict, fm.X, fm.y, fm.names,
                                                             repeats, Rng(seed).seed());
        features::write_importance_csv(require(out_path, "--out"), report);
        const std::string channel = features::select_channel(report);
        if (!selected_out.empty()) {
            std::ofstream sel(selected_out);
            if (!sel) throw IoError("cannot write " + selected_out);
            sel << channel << "\n";
        }
        std::cout << "selected_channel: " << channel << "\n";
    });

    // --- gaf encode ----------------------------------------------------------
    auto* gaf_cmd = app.add_subcommand("gaf", "Gramian angular field encoding");
    gaf_cmd->require_subcommand(1);
    gaf_cmd->fallthrough();
    auto* gaf_encode = gaf_cmd->add_subcommand("encode", "Epoch dir -> image CSV/PGM pairs");
    gaf_encode->fallthrough();
    std::string gaf_epochs;
    pipeline::GafSettings gaf_settings;
    gaf_settings.channel.clear();
    std::string gaf_kind = "gasf";
    gaf_encode->add_option("--epochs", gaf_epochs, "Epoch directory")->required();
    gaf_encode->add_option("--channel", gaf_settings.channel, "Channel id")->required();
    gaf_encode->add_option("--signal", gaf_settings.signal, "hbo or hbr")->capture_default_str();
    gaf_encode->add_option("--kind", gaf_kind, "gasf or gadf")
        ->check(CLI::IsMember({"gasf", "gadf"}))
        ->capture_default_str();
    gaf_encode->add_option("--size", gaf_settings.image_size, "Image side length")
        ->capture_default_str();
    gaf_encode->add_flag("--full-window", gaf_settings.full_window,
                         "Encode the full [-5, 25] s window, not just t >= 0");
    gaf_encode->callback([&] {
        gaf_settings.kind = gaf::gaf_kind_from_name(gaf_kind);
        const auto epochs = preprocess::read_epochs_dir(gaf_epochs);
        if (epochs.empty()) throw EmptyDataset(gaf_epochs + ": no epochs");
        const fs::path dir = require(out_path, "--out");
        fs::create_directories(dir);
        std::string index = "image_file,task\n";
        for (std::size_t e = 0; e < epochs.size(); ++e) {
            const gaf::GafImage img = pipeline::encode_epoch(epochs[e], gaf_settings);
            std::string n = std::to_string(e);
            while (n.size() < 3) n.insert(n.begin(), '0');
            gaf::export_image(img, (dir / ("trial_" + n + ".csv")).string(),
                              (dir / ("trial_" + n + ".pgm")).string());
            index += "trial_" + n + ".csv," + task_name(img.task) + "\n";
        }
        std::ofstream index_out(dir / "labels.csv");
        if (!index_out) throw IoError("cannot write " + (dir / "labels.csv").string());
        index_out << index;
        std::cout << "wrote " << epochs.size() << " images to " << out_path << "\n";
    });

    // --- train ---------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train the CNN on an image directory");
    train_cmd->fallthrough();
    std::string train_images, network_file, train_cfg_file;
    train_cmd->add_option("--images", train_images, "Image directory from gaf encode")
        ->required();
    train_cmd->add_option("--network", network_file, "NetworkSpec JSON (default: built-in)");
    train_cmd->add_option("--train-config", train_cfg_file, "TrainConfig JSON");
    train_cmd->callback([&] {
        const ImageSet set = load_images_dir(train_images);
        const std::size_t n = set.x.shape[2];
        const nn::NetworkSpec spec = network_file.empty() ? nn::NetworkSpec::default_spec(n)
                                                          : nn::NetworkSpec::load(network_file);
        const nn::TrainConfig cfg =
            train_cfg_file.empty() ? nn::TrainConfig{} : nn::TrainConfig::load(train_cfg_file);
        eval::CnnClassifier clf(spec, cfg);
        clf.fit(set.x, set.y, seed);
        nn::save_model(require(out_path, "--out"), clf.network());
        const auto& h = clf.history();
        std::cout << "trained on " << set.y.size() << " images; best epoch " << h.best_epoch
                  << " of " << h.stopped_epoch;
        if (!h.epochs.empty())
            std::cout << ", val accuracy "
                      << csv::format_double(h.epochs[h.best_epoch].val_accuracy);
        std::cout << "\nwrote " << out_path << "\n";
    });

    // --- eval cv / cv-cnn ----------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Cross-validated evaluation");
    eval_cmd->require_subcommand(1);
    eval_cmd->fallthrough();

    auto* eval_cv = eval_cmd->add_subcommand("cv", "Feature baseline CV (logreg or knn)");
    eval_cv->fallthrough();
    std::string cv_features, cv_model = "logreg";
    std::size_t cv_k = 5, cv_knn_k = 5;
    eval_cv->add_option("--features", cv_features, "Feature CSV")->required();
    eval_cv->add_option("--model", cv_model, "logreg or knn")
        ->check(CLI::IsMember({"logreg", "knn"}))
        ->capture_default_str();
    eval_cv->add_option("--k", cv_k, "Fold count")->capture_default_str();
    eval_cv->add_option("--knn-k", cv_knn_k, "Neighbours for knn")->capture_default_str();
    eval_cv->callback([&] {
        const auto fm = features::read_features_csv(cv_features);
        const auto folds =
            eval::make_folds(fm.y, cv_k, true, Rng(seed).derive(0x666f6c64u).seed());
        eval::ModelFactory factory;
        if (cv_model == "knn") {
            factory = [&] { return std::make_unique<eval::KnnClassifier>(cv_knn_k); };
        } else {
            factory = [] { return std::make_unique<eval::LogregClassifier>(); };
        }
        const auto report =
            eval::run_cv(fm.X, fm.y, factory, folds, Rng(seed).derive(0x6376u).seed());
        write_report(require(out_path, "--out"), report);
        std::cout << cv_model << " accuracy: " << csv::format_double(report.accuracy) << "\n";
    });

    auto* eval_cnn = eval_cmd->add_subcommand("cv-cnn", "CNN CV on an image directory");
    eval_cnn->fallthrough();
    std::string cnn_images, cnn_network_file, cnn_train_file;
    std::size_t cnn_k = 5;
    eval_cnn->add_option("--images", cnn_images, "Image directory from gaf encode")->required();
    eval_cnn->add_option("--k", cnn_k, "Fold count")->capture_default_str();
    eval_cnn->add_option("--network", cnn_network_file, "NetworkSpec JSON (default: built-in)");
    eval_cnn->add_option("--train-config", cnn_train_file, "TrainConfig JSON");
    eval_cnn->callback([&] {
        const ImageSet set = load_images_dir(cnn_images);
        const std::size_t n = set.x.shape[2];
        const nn::NetworkSpec spec = cnn_network_file.empty()
                                         ? nn::NetworkSpec::default_spec(n)
                                         : nn::NetworkSpec::load(cnn_network_file);
        const nn::TrainConfig cfg =
            cnn_train_file.empty() ? nn::TrainConfig{} : nn::TrainConfig::load(cnn_train_file);
        const auto folds =
            eval::make_folds(set.y, cnn_k, true, Rng(seed).derive(0x666f6c64u).seed());
        const auto report = eval::run_cv(
            set.x, set.y, [&] { return std::make_unique<eval::CnnClassifier>(spec, cfg); }, folds,
            Rng(seed).derive(0x6376u).seed());
        write_report(require(out_path, "--out"), report);
        std::cout << "cnn accuracy: " << csv::format_double(report.accuracy) << "\n";
    });

    // --- classify ------------------------------------------------------------
    auto* classify = app.add_subcommand("classify", "Classify one epoch CSV or GAF image CSV");
    classify->fallthrough();
    std::string model_path, input_path, cls_channel, cls_signal, cls_kind;
    std::size_t cls_size = 0;
    bool cls_full_window = false;
    classify->add_option("--model", model_path, "Trained model (.gnn1)")->required();
    classify->add_option("--input", input_path, "Epoch CSV or image CSV")->required();
    classify->add_option("--channel", cls_channel, "Channel to encode (epoch input)");
    classify->add_option("--signal", cls_signal, "hbo or hbr");
    classify->add_option("--kind", cls_kind, "gasf or gadf")
        ->check(CLI::IsMember({"gasf", "gadf"}));
    classify->add_option("--size", cls_size, "Image side length");
    classify->add_flag("--full-window", cls_full_window, "Encode the full epoch window");
    classify->callback([&] {
        pipeline::PipelineConfig cfg;
        if (!config_path.empty()) cfg = pipeline::PipelineConfig::load(config_path);
        if (!cls_channel.empty()) cfg.gaf.channel = cls_channel;
        if (!cls_signal.empty()) cfg.gaf.signal = cls_signal;
        if (!cls_kind.empty()) cfg.gaf.kind = gaf::gaf_kind_from_name(cls_kind);
        if (cls_size != 0) cfg.gaf.image_size = cls_size;
        if (cls_full_window) cfg.gaf.full_window = true;
        const auto res = pipeline::classify_file(cfg, model_path, input_path);
        for (int c = 0; c < kNumTasks; ++c)
            std::cout << task_name(task_from_index(c)) << ": "
                      << csv::format_double(res.probabilities[static_cast<std::size_t>(c)])
                      << "\n";
        std::cout << "prediction: " << task_name(res.label) << "\n";
    });

    // --- pipeline run --------------------------------------------------------
    auto* pipeline_cmd = app.add_subcommand("pipeline", "End-to-end runs");
    pipeline_cmd->require_subcommand(1);
    pipeline_cmd->fallthrough();
    auto* pipe_run = pipeline_cmd->add_subcommand("run", "Run every stage from one config");
    pipe_run->fallthrough();
    pipe_run->callback([&] {
        pipeline::PipelineConfig cfg =
            pipeline::PipelineConfig::load(require(config_path, "--config"));
        if (!out_path.empty()) cfg.out_dir = out_path;
        if (app.count("--seed") > 0) cfg.seed = seed;
        const auto result = pipeline::run_pipeline(cfg);
        std::cout << "subjects: " << result.subjects.size() << ", trials: " << result.n_trials
                  << "\nselected channel: " << result.selected_channel << "\n";
        if (result.cnn_ran)
            std::cout << "cnn pooled accuracy: " << csv::format_double(result.cnn_pooled.accuracy)
                      << "\n";
        if (result.features_ran) {
            std::cout << "logreg pooled accuracy: "
                      << csv::format_double(result.logreg_pooled.accuracy) << "\n";
            std::cout << "knn pooled accuracy: "
                      << csv::format_double(result.knn_pooled.accuracy) << "\n";
        }
        std::cout << "report: " << result.report_path << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
