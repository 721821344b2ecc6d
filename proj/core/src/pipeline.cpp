#include "nirsgaf/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "nirsgaf/cv.hpp"
#include "nirsgaf/errors.hpp"
#include "nirsgaf/features.hpp"
#include "nirsgaf/ingest.hpp"
#include "nirsgaf/model_io.hpp"
#include "nirsgaf/rng.hpp"

namespace nirsgaf::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One derivation tag per randomized decision; per-subject tags add the
// subject index.
constexpr uint64_t kTagSynth = 0x73796e74'68000000ull;
constexpr uint64_t kTagImportance = 0x696d7072'00000000ull;
constexpr uint64_t kTagFoldsCnn = 0x666f6c64'43000000ull;
constexpr uint64_t kTagFoldsFeat = 0x666f6c64'46000000ull;
constexpr uint64_t kTagCvCnn = 0x63764e4e'00000000ull;
constexpr uint64_t kTagCvLogreg = 0x63764c52'00000000ull;
constexpr uint64_t kTagCvKnn = 0x63764b4e'00000000ull;
constexpr uint64_t kTagFinalFit = 0x66696e61'6c000000ull;

void require_keys(const json& obj, const std::vector<std::string>& allowed,
                  const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

// Relative path under out_dir, with forward slashes, for manifests/reports.
std::string rel(const fs::path& out_dir, const fs::path& p) {
    return fs::relative(p, out_dir).generic_string();
}

void write_manifest(const fs::path& out_dir, const std::string& stage, const json& inputs,
                    const json& params, const std::vector<std::string>& outputs) {
    json m;
    m["stage"] = stage;
    m["inputs"] = inputs;
    m["params"] = params;
    m["outputs"] = outputs;
    write_text_file(out_dir / "manifests" / (stage + ".json"), m.dump(2) + "\n");
}

// Rethrows module errors with the stage name prepended, keeping the class.
template <typename F>
auto stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.error_class(), name + " stage: " + e.what());
    }
}

std::string subject_label(std::size_t index, std::size_t total) {
    std::string digits = std::to_string(index + 1);
    const std::size_t width = std::max<std::size_t>(2, std::to_string(total).size());
    while (digits.size() < width) digits.insert(digits.begin(), '0');
    return "s" + digits;
}

std::string trial_file_name(std::size_t index, const char* ext) {
    std::string n = std::to_string(index);
    while (n.size() < 3) n.insert(n.begin(), '0');
    return "trial_" + n + ext;
}

json metrics_to_json(const eval::MetricsReport& r) { return json::parse(r.to_json_text()); }

json history_to_json(const nn::History& h) {
    json epochs = json::array();
    for (const auto& e : h.epochs) {
        epochs.push_back({{"train_loss", e.train_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"val_loss", e.val_loss},
                          {"val_accuracy", e.val_accuracy},
                          {"learning_rate", e.learning_rate}});
    }
    return {{"epochs", epochs},
            {"lr_drops", h.lr_drops},
            {"best_epoch", h.best_epoch},
            {"stopped_epoch", h.stopped_epoch},
            {"early_stopped", h.early_stopped}};
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("pipeline config: expected a JSON object");
    require_keys(j,
                 {"seed", "out_dir", "input", "preprocess", "gaf", "features", "eval", "network",
                  "train"},
                 "pipeline config");

    PipelineConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out_dir = j.value("out_dir", std::string());

        if (j.contains("input")) {
            const json& in = j.at("input");
            require_keys(in, {"dir", "synth"}, "pipeline config: input");
            if (in.contains("dir") && in.contains("synth"))
                throw ConfigError("pipeline config: input has both 'dir' and 'synth'");
            cfg.input_dir = in.value("dir", std::string());
            if (in.contains("synth")) {
                const json& s = in.at("synth");
                require_keys(s,
                             {"subjects", "trials_per_class", "channels", "sample_rate_hz",
                              "noise_sd", "drift_amplitude", "inter_trial_s", "iti_jitter_s"},
                             "pipeline config: synth");
                cfg.synth.subjects = s.value("subjects", cfg.synth.subjects);
                cfg.synth.trials_per_class = s.value("trials_per_class", cfg.synth.trials_per_class);
                cfg.synth.channels = s.value("channels", cfg.synth.channels);
                cfg.synth.sample_rate_hz = s.value("sample_rate_hz", cfg.synth.sample_rate_hz);
                cfg.synth.noise_sd = s.value("noise_sd", cfg.synth.noise_sd);
                cfg.synth.drift_amplitude = s.value("drift_amplitude", cfg.synth.drift_amplitude);
                cfg.synth.inter_trial_s = s.value("inter_trial_s", cfg.synth.inter_trial_s);
                cfg.synth.iti_jitter_s = s.value("iti_jitter_s", cfg.synth.iti_jitter_s);
            }
        }

        if (j.contains("preprocess")) {
            const json& p = j.at("preprocess");
            require_keys(p, {"filter", "coefficients"}, "pipeline config: preprocess");
            if (p.contains("filter")) {
                const json& f = p.at("filter");
                require_keys(f, {"order", "low_hz", "high_hz"}, "pipeline config: filter");
                cfg.filter.order = f.value("order", cfg.filter.order);
                cfg.filter.passband_low_hz = f.value("low_hz", cfg.filter.passband_low_hz);
                cfg.filter.passband_high_hz = f.value("high_hz", cfg.filter.passband_high_hz);
            }
            cfg.coefficients = p.value("coefficients", cfg.coefficients);
        }

        if (j.contains("gaf")) {
            const json& g = j.at("gaf");
            require_keys(g, {"channel", "signal", "kind", "image_size", "full_window"},
                         "pipeline config: gaf");
            cfg.gaf.channel = g.value("channel", cfg.gaf.channel);
            cfg.gaf.signal = g.value("signal", cfg.gaf.signal);
            if (g.contains("kind"))
                cfg.gaf.kind = gaf::gaf_kind_from_name(g.at("kind").get<std::string>());
            cfg.gaf.image_size = g.value("image_size", cfg.gaf.image_size);
            cfg.gaf.full_window = g.value("full_window", cfg.gaf.full_window);
        }

        if (j.contains("features")) {
            const json& f = j.at("features");
            require_keys(f, {"importance_repeats"}, "pipeline config: features");
            cfg.features.importance_repeats =
                f.value("importance_repeats", cfg.features.importance_repeats);
        }

        if (j.contains("eval")) {
            const json& e = j.at("eval");
            require_keys(e, {"k_folds", "k_folds_cnn", "run_cnn", "run_features", "knn_k"},
                         "pipeline config: eval");
            cfg.eval.k_folds = e.value("k_folds", cfg.eval.k_folds);
            cfg.eval.k_folds_cnn = e.value("k_folds_cnn", cfg.eval.k_folds_cnn);
            cfg.eval.run_cnn = e.value("run_cnn", cfg.eval.run_cnn);
            cfg.eval.run_features = e.value("run_features", cfg.eval.run_features);
            cfg.eval.knn_k = e.value("knn_k", cfg.eval.knn_k);
        }

        cfg.network = j.contains("network")
                          ? nn::NetworkSpec::from_json_text(j.at("network").dump())
                          : nn::NetworkSpec::default_spec(cfg.gaf.image_size);
        if (j.contains("train")) cfg.train = nn::TrainConfig::from_json_text(j.at("train").dump());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    return from_json_text(read_text_file(path));
}

std::string PipelineConfig::to_json_text(int indent) const {
    json input;
    if (!input_dir.empty()) {
        input["dir"] = input_dir;
    } else {
        input["synth"] = {{"subjects", synth.subjects},
                          {"trials_per_class", synth.trials_per_class},
                          {"channels", synth.channels},
                          {"sample_rate_hz", synth.sample_rate_hz},
                          {"noise_sd", synth.noise_sd},
                          {"drift_amplitude", synth.drift_amplitude},
                          {"inter_trial_s", synth.inter_trial_s},
                          {"iti_jitter_s", synth.iti_jitter_s}};
    }
    const json j = {
        {"seed", seed},
        {"out_dir", out_dir},
        {"input", input},
        {"preprocess",
         {{"filter",
           {{"order", filter.order},
            {"low_hz", filter.passband_low_hz},
            {"high_hz", filter.passband_high_hz}}},
          {"coefficients", coefficients}}},
        {"gaf",
         {{"channel", gaf.channel},
          {"signal", gaf.signal},
          {"kind", gaf::gaf_kind_name(gaf.kind)},
          {"image_size", gaf.image_size},
          {"full_window", gaf.full_window}}},
        {"features", {{"importance_repeats", features.importance_repeats}}},
        {"eval",
         {{"k_folds", eval.k_folds},
          {"k_folds_cnn", eval.k_folds_cnn},
          {"run_cnn", eval.run_cnn},
          {"run_features", eval.run_features},
          {"knn_k", eval.knn_k}}},
        {"network", json::parse(network.to_json_text())},
        {"train", json::parse(train.to_json_text())},
    };
    return j.dump(indent) + "\n";
}

void PipelineConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("pipeline: out_dir is required");
    if (!input_dir.empty() && !fs::is_directory(input_dir))
        throw ConfigError("pipeline: input dir not found: " + input_dir);
    if (coefficients != "identity" && !fs::is_regular_file(coefficients))
        throw ConfigError("pipeline: coefficients file not found: " + coefficients);

    if (input_dir.empty()) {
        if (synth.subjects == 0) throw ConfigError("pipeline: synth.subjects must be >= 1");
        if (synth.trials_per_class == 0)
            throw ConfigError("pipeline: synth.trials_per_class must be >= 1");
        if (synth.channels == 0) throw ConfigError("pipeline: synth.channels must be >= 1");
        if (!(synth.sample_rate_hz > 0))
            throw ConfigError("pipeline: synth.sample_rate_hz must be positive");
        if (!(synth.inter_trial_s > 0))
            throw ConfigError("pipeline: synth.inter_trial_s must be positive");
        if (synth.iti_jitter_s < 0)
            throw ConfigError("pipeline: synth.iti_jitter_s must be >= 0");
    }

    if (filter.order < 1) throw ConfigError("pipeline: filter.order must be >= 1");
    if (!(filter.passband_low_hz > 0) || !(filter.passband_high_hz > filter.passband_low_hz))
        throw ConfigError("pipeline: filter band must satisfy 0 < low_hz < high_hz");

    if (gaf.channel.empty()) throw ConfigError("pipeline: gaf.channel must not be empty");
    if (gaf.signal != "hbo" && gaf.signal != "hbr")
        throw ConfigError("pipeline: gaf.signal must be hbo or hbr");
    if (gaf.image_size < 2) throw ConfigError("pipeline: gaf.image_size must be >= 2");
    if (gaf.channel == "auto" && !eval.run_features)
        throw ConfigError("pipeline: gaf.channel \"auto\" requires eval.run_features");

    if (features.importance_repeats == 0)
        throw ConfigError("pipeline: features.importance_repeats must be >= 1");

    if (eval.k_folds < 2) throw ConfigError("pipeline: eval.k_folds must be >= 2");
    if (eval.k_folds_cnn < 2) throw ConfigError("pipeline: eval.k_folds_cnn must be >= 2");
    if (eval.knn_k == 0) throw ConfigError("pipeline: eval.knn_k must be >= 1");

    network.validate();
    const std::vector<std::size_t> want{1, gaf.image_size, gaf.image_size};
    if (network.input_shape != want)
        throw ConfigError("pipeline: network input shape does not match gaf.image_size " +
                          std::to_string(gaf.image_size));
    train.validate();
}

gaf::GafImage encode_epoch(const preprocess::Epoch& epoch, const GafSettings& settings) {
    if (settings.channel == "auto")
        throw ConfigError("gaf: channel \"auto\" is unresolved here; name a concrete channel");
    if (settings.signal != "hbo" && settings.signal != "hbr")
        throw ConfigError("gaf: signal must be hbo or hbr");

    const preprocess::HbSeries* ch = nullptr;
    for (const auto& c : epoch.channels)
        if (c.channel_id == settings.channel) {
            ch = &c;
            break;
        }
    if (ch == nullptr) throw DataError("gaf: epoch has no channel '" + settings.channel + "'");

    const std::vector<double>& signal = settings.signal == "hbr" ? ch->hbr : ch->hbo;
    std::vector<double> series;
    if (settings.full_window) {
        series = signal;
    } else {
        series.reserve(signal.size());
        for (std::size_t i = 0; i < signal.size(); ++i)
            if (epoch.time_at(i) >= 0.0) series.push_back(signal[i]);
    }
    if (series.empty()) throw EmptySeries();

    const std::vector<double> reduced = gaf::paa_downsample(series, settings.image_size);
    const gaf::RescaledSeries rescaled = gaf::rescale(reduced);
    gaf::GafImage img =
        settings.kind == gaf::GafKind::GADF ? gaf::gadf(rescaled) : gaf::gasf(rescaled);
    img.channel_id = settings.channel;
    img.task = epoch.task;
    return img;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();

    const fs::path out(cfg.out_dir);
    fs::create_directories(out / "manifests");

    const Rng root(cfg.seed);
    PipelineResult result;

    // ---- ingest ------------------------------------------------------------
    std::vector<Recording> recordings;
    stage("ingest", [&] {
        json inputs = json::array();
        std::vector<std::string> outputs;

        if (cfg.input_dir.empty()) {
            for (std::size_t i = 0; i < cfg.synth.subjects; ++i) {
                ingest::SynthesisConfig sc;
                sc.n_trials_per_class = cfg.synth.trials_per_class;
                sc.n_channels = cfg.synth.channels;
                sc.sample_rate_hz = cfg.synth.sample_rate_hz;
                sc.noise_sd = cfg.synth.noise_sd;
                sc.drift_amplitude = cfg.synth.drift_amplitude;
                sc.inter_trial_s = cfg.synth.inter_trial_s;
                sc.iti_jitter_s = cfg.synth.iti_jitter_s;
                sc.subject_id = subject_label(i, cfg.synth.subjects);
                sc.seed = root.derive(kTagSynth + i).seed();

                recordings.push_back(ingest::synthesize_recording(sc));
                const fs::path dir = out / "recordings" / sc.subject_id;
                ingest::write_recording_dir(dir.string(), recordings.back());
                for (const char* f : {"recording.csv", "markers.csv", "meta.json"})
                    outputs.push_back(rel(out, dir / f));
            }
        } else {
            std::vector<fs::path> dirs;
            if (fs::exists(fs::path(cfg.input_dir) / "recording.csv")) {
                dirs.push_back(cfg.input_dir);
            } else {
                for (const auto& entry : fs::directory_iterator(cfg.input_dir))
                    if (entry.is_directory() && fs::exists(entry.path() / "recording.csv"))
                        dirs.push_back(entry.path());
                std::sort(dirs.begin(), dirs.end());
            }
            if (dirs.empty())
                throw EmptyDataset("no recording directories under " + cfg.input_dir);
            for (const auto& dir : dirs) {
                Recording rec = ingest::load_recording_dir(dir.string());
                if (rec.subject_id.empty()) rec.subject_id = dir.filename().string();
                recordings.push_back(std::move(rec));
                inputs.push_back(fs::absolute(dir).generic_string());
            }
        }

        json summary;
        summary["subjects"] = json::array();
        for (const auto& rec : recordings) {
            result.subjects.push_back(rec.subject_id);
            summary["subjects"].push_back({{"id", rec.subject_id},
                                           {"n_samples", rec.n_samples()},
                                           {"n_channels", rec.channels.size()},
                                           {"n_markers", rec.markers.size()},
                                           {"sample_rate_hz", rec.sample_rate_hz}});
        }
        write_text_file(out / "ingest_summary.json", summary.dump(2) + "\n");
        outputs.push_back("ingest_summary.json");

        json params;
        if (cfg.input_dir.empty()) {
            params["mode"] = "synth";
            params["subjects"] = cfg.synth.subjects;
            params["trials_per_class"] = cfg.synth.trials_per_class;
        } else {
            params["mode"] = "load";
        }
        write_manifest(out, "ingest", inputs, params, outputs);
        return 0;
    });

    // ---- preprocess --------------------------------------------------------
    std::vector<std::vector<preprocess::Epoch>> epochs(recordings.size());
    stage("preprocess", [&] {
        const auto coeff = preprocess::BeerLambertCoefficients::load(cfg.coefficients);
        std::vector<std::string> outputs;
        for (std::size_t i = 0; i < recordings.size(); ++i) {
            epochs[i] = preprocess::preprocess_recording(recordings[i], coeff, cfg.filter);
            const fs::path dir = out / "epochs" / result.subjects[i];
            preprocess::write_epochs_dir(dir.string(), epochs[i]);
            outputs.push_back(rel(out, dir / "labels.csv"));
            for (std::size_t e = 0; e < epochs[i].size(); ++e) {
                std::string n = std::to_string(e);
                while (n.size() < 3) n.insert(n.begin(), '0');
                outputs.push_back(rel(out, dir / ("epoch_" + n + ".csv")));
            }
        }
        json params;
        params["filter"] = {{"order", cfg.filter.order},
                            {"low_hz", cfg.filter.passband_low_hz},
                            {"high_hz", cfg.filter.passband_high_hz}};
        params["coefficients"] = cfg.coefficients;
        json inputs = json::array();
        if (cfg.input_dir.empty())  // external inputs are already listed by ingest
            for (const auto& id : result.subjects)
                inputs.push_back("recordings/" + id + "/recording.csv");
        write_manifest(out, "preprocess", inputs, params, outputs);
        return 0;
    });

    // ---- features ----------------------------------------------------------
    const bool want_features = cfg.eval.run_features || cfg.gaf.channel == "auto";
    std::vector<features::FeatureMatrix> feats(recordings.size());
    features::FeatureMatrix pooled_feats;
    if (want_features) {
        stage("features", [&] {
            std::vector<std::string> outputs;
            fs::create_directories(out / "features");
            std::size_t total = 0;
            for (std::size_t i = 0; i < epochs.size(); ++i) {
                feats[i] = features::feature_matrix(epochs[i]);
                if (i == 0) {
                    pooled_feats.names = feats[i].names;
                } else if (feats[i].names != pooled_feats.names) {
                    throw DataError("subject " + result.subjects[i] +
                                    " disagrees on channels/features with " + result.subjects[0]);
                }
                total += feats[i].X.shape[0];
                const fs::path path = out / "features" / (result.subjects[i] + ".csv");
                features::write_features_csv(path.string(), feats[i]);
                outputs.push_back(rel(out, path));
            }
            const std::size_t dim = feats[0].X.shape[1];
            pooled_feats.X = Tensor({total, dim});
            std::size_t row = 0;
            for (const auto& fm : feats) {
                std::copy(fm.X.data.begin(), fm.X.data.end(),
                          pooled_feats.X.data.begin() + row * dim);
                row += fm.X.shape[0];
                pooled_feats.y.insert(pooled_feats.y.end(), fm.y.begin(), fm.y.end());
            }
            json inputs = json::array();
            for (const auto& id : result.subjects) inputs.push_back("epochs/" + id + "/labels.csv");
            write_manifest(out, "features", inputs, json::object(), outputs);
            return 0;
        });
        result.features_ran = true;
    }

    // ---- importance + channel selection ------------------------------------
    if (cfg.gaf.channel == "auto") {
        stage("importance", [&] {
            const auto model =
                baselines::train_logreg(pooled_feats.X, pooled_feats.y, 1e-4, 0.1, 500);
            const features::PredictFn predict = [&model](const Tensor& x) {
                return model.predict(x);
            };
            const auto report = features::permutation_importance(
                predict, pooled_feats.X, pooled_feats.y, pooled_feats.names,
                cfg.features.importance_repeats, root.derive(kTagImportance).seed());
            result.selected_channel = features::select_channel(report);

            fs::create_directories(out / "importance");
            const fs::path csv = out / "importance" / "importance.csv";
            features::write_importance_csv(csv.string(), report);
            write_text_file(out / "importance" / "selected_channel.txt",
                            result.selected_channel + "\n");

            json inputs = json::array();
            for (const auto& id : result.subjects) inputs.push_back("features/" + id + ".csv");
            write_manifest(out, "importance", inputs,
                           {{"repeats", cfg.features.importance_repeats}, {"model", "logreg"}},
                           {rel(out, csv), "importance/selected_channel.txt"});
            return 0;
        });
    } else {
        result.selected_channel = cfg.gaf.channel;
    }

    // ---- gaf encode ---------------------------------------------------------
    GafSettings gaf_settings = cfg.gaf;
    gaf_settings.channel = result.selected_channel;
    std::vector<Tensor> images(recordings.size());
    std::vector<std::vector<int>> labels(recordings.size());
    stage("gaf", [&] {
        std::vector<std::string> outputs;
        const std::size_t s = cfg.gaf.image_size;
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            const fs::path dir = out / "images" / result.subjects[i];
            fs::create_directories(dir);
            images[i] = Tensor({epochs[i].size(), 1, s, s});
            std::ostringstream index;
            index << "image_file,task\n";
            for (std::size_t e = 0; e < epochs[i].size(); ++e) {
                const gaf::GafImage img = encode_epoch(epochs[i][e], gaf_settings);
                std::copy(img.matrix.begin(), img.matrix.end(),
                          images[i].data.begin() + e * s * s);
                labels[i].push_back(static_cast<int>(epochs[i][e].task));

                const std::string csv_name = trial_file_name(e, ".csv");
                const std::string pgm_name = trial_file_name(e, ".pgm");
                gaf::export_image(img, (dir / csv_name).string(), (dir / pgm_name).string());
                index << csv_name << "," << task_name(img.task) << "\n";
                outputs.push_back(rel(out, dir / csv_name));
                outputs.push_back(rel(out, dir / pgm_name));
            }
            write_text_file(dir / "labels.csv", index.str());
            outputs.push_back(rel(out, dir / "labels.csv"));
        }
        json inputs = json::array();
        for (const auto& id : result.subjects) inputs.push_back("epochs/" + id + "/labels.csv");
        const json params = {{"channel", gaf_settings.channel},
                             {"signal", gaf_settings.signal},
                             {"kind", gaf::gaf_kind_name(gaf_settings.kind)},
                             {"image_size", s},
                             {"full_window", gaf_settings.full_window}};
        write_manifest(out, "gaf", inputs, params, outputs);
        return 0;
    });
    result.n_trials = 0;
    for (const auto& l : labels) result.n_trials += l.size();

    // ---- train (deployable model on the first recording) -------------------
    if (cfg.eval.run_cnn) {
        stage("train", [&] {
            eval::CnnClassifier final_fit(cfg.network, cfg.train);
            final_fit.fit(images[0], labels[0], root.derive(kTagFinalFit).seed());

            fs::create_directories(out / "model");
            const fs::path model_path = out / "model" / "model.gnn1";
            nn::save_model(model_path.string(), final_fit.network());
            write_text_file(out / "model" / "history.json",
                            history_to_json(final_fit.history()).dump(2) + "\n");
            result.model_path = model_path.string();

            const json inputs = {"images/" + result.subjects[0] + "/labels.csv"};
            const json params = {{"subject", result.subjects[0]},
                                 {"train", json::parse(cfg.train.to_json_text())}};
            write_manifest(out, "train", inputs, params,
                           {"model/model.gnn1", "model/model.gnn1.json", "model/history.json"});
            return 0;
        });
        result.cnn_ran = true;
    }

    // ---- eval: per-subject cross-validation, pooled over subjects ----------
    stage("eval", [&] {
        json per_subject = json::array();

        struct Pool {
            std::vector<double> scores;  // n x 3, row-major
            std::vector<int> preds;
            std::vector<int> labels;
            std::vector<eval::FoldMetrics> per_subject_acc;

            void add(std::size_t subject, const eval::CvResult& cv, const std::vector<int>& y) {
                scores.insert(scores.end(), cv.scores.data.begin(), cv.scores.data.end());
                preds.insert(preds.end(), cv.predictions.begin(), cv.predictions.end());
                labels.insert(labels.end(), y.begin(), y.end());
                per_subject_acc.push_back({subject, y.size(), cv.report.accuracy});
            }

            eval::MetricsReport aggregate() const {
                Tensor s({labels.size(), 3});
                s.data = scores;
                eval::MetricsReport r = eval::compute_metrics(s, labels, preds);
                r.per_fold = per_subject_acc;
                return r;
            }
        };
        Pool cnn_pool, logreg_pool, knn_pool;

        for (std::size_t i = 0; i < recordings.size(); ++i) {
            json entry;
            entry["subject"] = result.subjects[i];
            entry["n_trials"] = labels[i].size();
            result.per_subject.push_back({result.subjects[i], labels[i].size(), 0.0, 0.0, 0.0});

            if (cfg.eval.run_cnn) {
                const auto folds = eval::make_folds(labels[i], cfg.eval.k_folds_cnn, true,
                                                    root.derive(kTagFoldsCnn + i).seed());
                const auto cv = eval::run_cv_detailed(
                    images[i], labels[i],
                    [&] {
                        return std::make_unique<eval::CnnClassifier>(cfg.network, cfg.train);
                    },
                    folds, root.derive(kTagCvCnn + i).seed());
                cnn_pool.add(i, cv, labels[i]);
                entry["cnn"] = metrics_to_json(cv.report);
                result.per_subject.back().cnn_accuracy = cv.report.accuracy;
            }

            if (cfg.eval.run_features) {
                const auto folds = eval::make_folds(feats[i].y, cfg.eval.k_folds, true,
                                                    root.derive(kTagFoldsFeat + i).seed());
                const auto lr_cv = eval::run_cv_detailed(
                    feats[i].X, feats[i].y,
                    [] { return std::make_unique<eval::LogregClassifier>(); }, folds,
                    root.derive(kTagCvLogreg + i).seed());
                logreg_pool.add(i, lr_cv, feats[i].y);
                entry["logreg"] = metrics_to_json(lr_cv.report);
                result.per_subject.back().logreg_accuracy = lr_cv.report.accuracy;

                const auto knn_cv = eval::run_cv_detailed(
                    feats[i].X, feats[i].y,
                    [&] { return std::make_unique<eval::KnnClassifier>(cfg.eval.knn_k); }, folds,
                    root.derive(kTagCvKnn + i).seed());
                knn_pool.add(i, knn_cv, feats[i].y);
                entry["knn"] = metrics_to_json(knn_cv.report);
                result.per_subject.back().knn_accuracy = knn_cv.report.accuracy;
            }
            per_subject.push_back(std::move(entry));
        }

        json pooled = json::object();
        if (cfg.eval.run_cnn) {
            result.cnn_pooled = cnn_pool.aggregate();
            pooled["cnn"] = metrics_to_json(result.cnn_pooled);
        }
        if (cfg.eval.run_features) {
            result.logreg_pooled = logreg_pool.aggregate();
            result.knn_pooled = knn_pool.aggregate();
            pooled["logreg"] = metrics_to_json(result.logreg_pooled);
            pooled["knn"] = metrics_to_json(result.knn_pooled);
        }

        json config_echo = json::parse(cfg.to_json_text());
        config_echo.erase("out_dir");  // keep the report byte-identical across out dirs

        json report;
        report["config"] = config_echo;
        report["subjects"] = result.subjects;
        report["n_trials"] = result.n_trials;
        report["selected_channel"] = result.selected_channel;
        report["per_subject"] = per_subject;
        report["pooled"] = pooled;

        const fs::path report_path = out / "report.json";
        write_text_file(report_path, report.dump(2) + "\n");
        result.report_path = report_path.string();

        json inputs = json::array();
        for (const auto& id : result.subjects) inputs.push_back("images/" + id + "/labels.csv");
        if (cfg.eval.run_features)
            for (const auto& id : result.subjects) inputs.push_back("features/" + id + ".csv");
        const json params = {{"k_folds", cfg.eval.k_folds},
                             {"k_folds_cnn", cfg.eval.k_folds_cnn},
                             {"run_cnn", cfg.eval.run_cnn},
                             {"run_features", cfg.eval.run_features},
                             {"knn_k", cfg.eval.knn_k}};
        write_manifest(out, "eval", inputs, params, {"report.json"});
        return 0;
    });

    return result;
}

ClassifyResult classify_file(const PipelineConfig& cfg, const std::string& model_path,
                             const std::string& input_path) {
    nn::Network net = nn::load_model(model_path);

    std::string first_line;
    {
        std::ifstream in(input_path, std::ios::binary);
        if (!in) throw IoError("cannot read " + input_path);
        std::getline(in, first_line);
        if (!first_line.empty() && first_line.back() == '\r') first_line.pop_back();
    }

    gaf::GafImage img;
    if (first_line.rfind("t,", 0) == 0) {
        const preprocess::Epoch epoch = preprocess::read_epoch_csv(input_path);
        img = encode_epoch(epoch, cfg.gaf);
    } else {
        img = gaf::import_image_csv(input_path);
    }

    const auto& want = net.spec().input_shape;
    if (want.size() != 3 || want[0] != 1 || want[1] != img.n || want[2] != img.n)
        throw ShapeMismatch("classify: model expects input " +
                            std::to_string(want.empty() ? 0 : want.back()) + "x" +
                            std::to_string(want.empty() ? 0 : want.back()) + ", image is " +
                            std::to_string(img.n) + "x" + std::to_string(img.n));

    Tensor x({1, 1, img.n, img.n});
    std::copy(img.matrix.begin(), img.matrix.end(), x.data.begin());
    const Tensor probs = net.predict_proba(x);

    ClassifyResult res;
    std::size_t best = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        res.probabilities[c] = probs.at2(0, c);
        if (res.probabilities[c] > res.probabilities[best]) best = c;
    }
    res.label = task_from_index(static_cast<int>(best));
    return res;
}

}  // namespace nirsgaf::pipeline
