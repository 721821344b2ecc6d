// Synthetic fNIRS generator. One fixed draw order from a single seeded
// stream keeps the output bit-identical for a given config:
//   1. trial label shuffle
//   2. onset jitter per trial
//   3. per channel: drift phases (wl1 then wl2), then noise (wl1 then wl2)
#include <cmath>
#include <numbers>

#include "nirsgaf/errors.hpp"
#include "nirsgaf/ingest.hpp"
#include "nirsgaf/rng.hpp"

namespace nirsgaf::ingest {

namespace {

double gamma_pdf(double t, double shape, double scale) {
    if (t <= 0.0) return 0.0;
    return std::pow(t, shape - 1.0) * std::exp(-t / scale) /
           (std::pow(scale, shape) * std::tgamma(shape));
}

constexpr double kPi = std::numbers::pi;
constexpr double kBoxcarSeconds = 10.0;   // task duration driving the response
constexpr double kHrfSupportSeconds = 32.0;
constexpr double kUndershootRatio = 1.0 / 6.0;
constexpr double kHbrGainFactor = -0.3;   // wl2 carries an anti-correlated copy
constexpr double kDriftSlowHz = 0.005;
constexpr double kDriftFastHz = 0.5;

// Task-engagement latency per class, seconds between the marker and the start
// of the 10 s boxcar. The GASF encoding downstream is invariant both to a
// global sign flip of the min-max rescaled series (arccos(-x) = pi - arccos(x)
// cancels in cos(phi_i + phi_j)) and, largely, to pure amplitude scaling, so
// classes that differed only in gain would collapse to near-identical images.
// Response *timing* survives the encoding; it is what separates MI from MA.
constexpr double kClassOnsetDelaySeconds[kNumTasks] = {0.0, 6.0, 0.0};

// response template = HRF convolved with a 10 s boxcar that starts delay_s
// after the marker, peak normalized to 1
std::vector<double> response_template(double rate, double delay_s) {
    const auto hrf_len = static_cast<std::size_t>(std::ceil(kHrfSupportSeconds * rate));
    const auto box_len = static_cast<std::size_t>(std::round(kBoxcarSeconds * rate));
    const auto delay_len = static_cast<std::size_t>(std::llround(delay_s * rate));
    std::vector<double> hrf(hrf_len);
    for (std::size_t i = 0; i < hrf_len; ++i) hrf[i] = canonical_hrf(static_cast<double>(i) / rate);

    std::vector<double> tmpl(delay_len + hrf_len + box_len, 0.0);
    for (std::size_t i = delay_len; i < tmpl.size(); ++i) {
        const std::size_t k = i - delay_len;
        double acc = 0.0;
        for (std::size_t j = 0; j < box_len && j <= k; ++j)
            if (k - j < hrf_len) acc += hrf[k - j];
        tmpl[i] = acc / rate;
    }
    double peak = 0.0;
    for (double v : tmpl) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : tmpl) v /= peak;
    return tmpl;
}

std::string channel_id(std::size_t index) {
    std::string n = std::to_string(index + 1);
    if (n.size() < 2) n = "0" + n;
    return "ch" + n;
}

}  // namespace

double canonical_hrf(double t) {
    // double-gamma: positive lobe peaking at 6 s minus a late undershoot
    return gamma_pdf(t, 7.0, 1.0) - kUndershootRatio * gamma_pdf(t, 16.0, 1.0);
}

std::map<Task, std::vector<double>> default_class_gains(std::size_t n_channels) {
    std::map<Task, std::vector<double>> gains;
    const double c = static_cast<double>(n_channels);
    const double mi_center = 0.45 * c, ma_center = 0.55 * c, width = 0.25 * c;
    for (int t = 0; t < kNumTasks; ++t) gains[static_cast<Task>(t)].resize(n_channels);
    for (std::size_t ch = 0; ch < n_channels; ++ch) {
        const double x = static_cast<double>(ch);
        const double mi = (x - mi_center) / width;
        const double ma = (x - ma_center) / width;
        gains[Task::MI][ch] = 1.0 * std::exp(-mi * mi);
        gains[Task::MA][ch] = 0.8 * std::exp(-ma * ma);
        gains[Task::IS][ch] = 0.0;  // idle: no evoked response at all
    }
    return gains;
}

Recording synthesize_recording(const SynthesisConfig& cfg) {
    if (cfg.n_trials_per_class < 1) throw ConfigError("n_trials_per_class must be >= 1");
    if (cfg.n_channels < 1) throw ConfigError("n_channels must be >= 1");
    if (cfg.sample_rate_hz <= 0.0) throw ConfigError("sample_rate_hz must be positive");
    if (cfg.noise_sd < 0.0) throw ConfigError("noise_sd must be non-negative");

    const double rate = cfg.sample_rate_hz;
    auto gains = cfg.class_response_gains.empty() ? default_class_gains(cfg.n_channels)
                                                  : cfg.class_response_gains;
    for (const auto& [task, g] : gains)
        if (g.size() != cfg.n_channels)
            throw ConfigError(std::string("gain vector for ") + task_name(task) + " has " +
                              std::to_string(g.size()) + " entries, expected " +
                              std::to_string(cfg.n_channels));

    Rng rng(cfg.seed);

    // trial labels, each class exactly n_trials_per_class times, shuffled
    std::vector<Task> labels;
    labels.reserve(3 * cfg.n_trials_per_class);
    for (int t = 0; t < kNumTasks; ++t)
        labels.insert(labels.end(), cfg.n_trials_per_class, static_cast<Task>(t));
    rng.shuffle(labels);

    // onsets: lead-in, then jittered inter-trial spacing
    const double lead_in_s = kEpochPreSeconds + cfg.inter_trial_s;
    std::vector<std::size_t> onsets;
    double t_onset = lead_in_s;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        onsets.push_back(static_cast<std::size_t>(std::llround(t_onset * rate)));
        t_onset += cfg.inter_trial_s + cfg.iti_jitter_s * rng.uniform(-1.0, 1.0);
    }
    const std::size_t n_samples =
        onsets.back() + static_cast<std::size_t>(std::ceil((kEpochPostSeconds + 15.0) * rate));

    std::vector<std::vector<double>> tmpl(kNumTasks);
    for (int t = 0; t < kNumTasks; ++t)
        tmpl[t] = response_template(rate, kClassOnsetDelaySeconds[t]);

    Recording rec;
    rec.subject_id = cfg.subject_id;
    rec.sample_rate_hz = rate;
    rec.channels.resize(cfg.n_channels);

    for (std::size_t ch = 0; ch < cfg.n_channels; ++ch) {
        auto& series = rec.channels[ch];
        series.channel_id = channel_id(ch);
        series.od_wl1.assign(n_samples, 0.0);
        series.od_wl2.assign(n_samples, 0.0);

        for (std::size_t trial = 0; trial < labels.size(); ++trial) {
            const double g = gains[labels[trial]][ch];
            if (g == 0.0) continue;
            const auto& shape = tmpl[static_cast<int>(labels[trial])];
            const std::size_t onset = onsets[trial];
            for (std::size_t i = 0; i < shape.size() && onset + i < n_samples; ++i) {
                series.od_wl1[onset + i] += g * shape[i];
                series.od_wl2[onset + i] += kHbrGainFactor * g * shape[i];
            }
        }

        const double ph1s = rng.uniform(0.0, 2.0 * kPi), ph1f = rng.uniform(0.0, 2.0 * kPi);
        const double ph2s = rng.uniform(0.0, 2.0 * kPi), ph2f = rng.uniform(0.0, 2.0 * kPi);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double t = static_cast<double>(i) / rate;
            series.od_wl1[i] +=
                cfg.drift_amplitude * (std::sin(2.0 * kPi * kDriftSlowHz * t + ph1s) +
                                       std::sin(2.0 * kPi * kDriftFastHz * t + ph1f));
            series.od_wl2[i] +=
                cfg.drift_amplitude * (std::sin(2.0 * kPi * kDriftSlowHz * t + ph2s) +
                                       std::sin(2.0 * kPi * kDriftFastHz * t + ph2f));
        }
        for (std::size_t i = 0; i < n_samples; ++i)
            series.od_wl1[i] += cfg.noise_sd * rng.normal();
        for (std::size_t i = 0; i < n_samples; ++i)
            series.od_wl2[i] += cfg.noise_sd * rng.normal();
    }

    rec.markers.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) rec.markers.push_back({onsets[i], labels[i]});

    rec.validate();
    return rec;
}

}  // namespace nirsgaf::ingest
