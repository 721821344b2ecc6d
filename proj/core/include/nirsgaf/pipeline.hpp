// End-to-end driver: a single JSON config runs
//   ingest -> preprocess -> (features -> importance -> channel select)
//          -> gaf encode -> train -> eval
// over one or many recordings. Every stage writes its artifact under the
// output directory plus a manifest (manifests/<stage>.json) listing inputs,
// parameters and outputs, so the provenance chain is complete. The final
// report.json is deterministic: identical config + inputs reproduce it byte
// for byte (it embeds the config with out_dir stripped and no timings).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nirsgaf/gaf.hpp"
#include "nirsgaf/metrics.hpp"
#include "nirsgaf/nn_network.hpp"
#include "nirsgaf/nn_train.hpp"
#include "nirsgaf/preprocess.hpp"
#include "nirsgaf/recording.hpp"

namespace nirsgaf::pipeline {

// Synthetic-input block: `subjects` independent pseudo-subjects, each a
// fresh recording with a seed derived from the pipeline seed.
struct SynthSettings {
    std::size_t subjects = 1;
    std::size_t trials_per_class = 30;
    std::size_t channels = 16;
    double sample_rate_hz = 13.3;
    double noise_sd = 0.4;
    double drift_amplitude = 0.25;
    double inter_trial_s = 35.0;
    double iti_jitter_s = 2.0;
};

struct GafSettings {
    std::string channel = "auto";  // concrete channel id, or "auto" via importance
    std::string signal = "hbo";    // hbo | hbr
    gaf::GafKind kind = gaf::GafKind::GASF;
    std::size_t image_size = 64;
    bool full_window = false;  // false: post-onset samples (t >= 0) only
};

struct FeatureSettings {
    std::size_t importance_repeats = 10;
};

struct EvalSettings {
    std::size_t k_folds = 5;      // per-subject CV folds, feature baselines
    std::size_t k_folds_cnn = 5;  // per-subject CV folds, CNN
    bool run_cnn = true;
    bool run_features = true;
    std::size_t knn_k = 5;
};

struct PipelineConfig {
    uint64_t seed = 1;
    std::string out_dir;
    std::string input_dir;  // empty: synthesize per `synth`
    SynthSettings synth;
    preprocess::FilterSpec filter;
    std::string coefficients = "identity";  // coefficients file or "identity"
    GafSettings gaf;
    FeatureSettings features;
    EvalSettings eval;
    nn::NetworkSpec network = nn::NetworkSpec::default_spec(64);
    nn::TrainConfig train;

    static PipelineConfig from_json_text(const std::string& text);
    static PipelineConfig load(const std::string& path);
    std::string to_json_text(int indent = 2) const;

    // Config-class failures only; throws before any stage runs.
    void validate() const;
};

struct SubjectSummary {
    std::string id;
    std::size_t n_trials = 0;
    double cnn_accuracy = 0.0;
    double logreg_accuracy = 0.0;
    double knn_accuracy = 0.0;
};

struct PipelineResult {
    std::vector<std::string> subjects;
    std::size_t n_trials = 0;
    std::string selected_channel;
    bool cnn_ran = false;
    bool features_ran = false;
    eval::MetricsReport cnn_pooled;     // held-out predictions pooled over subjects
    eval::MetricsReport logreg_pooled;  // (per_fold: one entry per subject)
    eval::MetricsReport knn_pooled;
    std::vector<SubjectSummary> per_subject;
    std::string report_path;
    std::string model_path;  // empty when the CNN stage is disabled
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// Window selection + PAA + rescale + GASF/GADF for the configured channel
// and signal. settings.channel must name a channel of the epoch.
gaf::GafImage encode_epoch(const preprocess::Epoch& epoch, const GafSettings& settings);

struct ClassifyResult {
    Task label = Task::MI;
    std::array<double, 3> probabilities{};  // MI, MA, IS; sums to 1
};

// input_path is either a GAF image CSV (square numeric matrix) or an epoch
// CSV (header starting "t,"); epochs are encoded per cfg.gaf, which must
// then name a concrete channel.
ClassifyResult classify_file(const PipelineConfig& cfg, const std::string& model_path,
                             const std::string& input_path);

}  // namespace nirsgaf::pipeline
