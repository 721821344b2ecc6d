// Recording I/O and the synthetic generator.
//
// On-disk layout of a recording directory:
//   recording.csv  one row per sample, columns  t,<ch>_wl1,<ch>_wl2,...
//   markers.csv    columns  onset_sample,task   (task is MI, MA or IS)
//
// Channel ids are discovered from the header: every column `X_wl1` with a
// matching `X_wl2` becomes channel X, in header order.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nirsgaf/recording.hpp"

namespace nirsgaf::ingest {

struct RecordingFormat {
    std::string time_column = "t";
    std::string wl1_suffix = "_wl1";
    std::string wl2_suffix = "_wl2";
    std::string onset_column = "onset_sample";
    std::string task_column = "task";
};

Recording load_recording(const std::string& data_csv, const std::string& markers_csv,
                         const RecordingFormat& fmt = {}, double sample_rate_hz = 13.3,
                         const std::string& subject_id = "");

// Directory form: <dir>/recording.csv + <dir>/markers.csv (+ optional
// <dir>/meta.json with sample_rate_hz and subject_id).
Recording load_recording_dir(const std::string& dir, const RecordingFormat& fmt = {});

void write_recording_dir(const std::string& dir, const Recording& rec,
                         const RecordingFormat& fmt = {});

struct SynthesisConfig {
    std::size_t n_trials_per_class = 30;
    double noise_sd = 0.4;
    double drift_amplitude = 0.25;
    uint64_t seed = 1;
    std::size_t n_channels = 16;
    double sample_rate_hz = 13.3;
    double inter_trial_s = 35.0;     // mean spacing between onsets
    double iti_jitter_s = 2.0;       // uniform jitter applied per trial
    std::string subject_id = "synthetic";
    // task -> per-channel response gain (negative = deactivation). Empty map
    // falls back to default_class_gains(n_channels).
    std::map<Task, std::vector<double>> class_response_gains;
};

// Built-in gain topography: overlapping Gaussian channel bumps, MI strongest
// around 0.45 x channels, MA slightly weaker around 0.55 x channels, IS
// exactly silent everywhere (idle has no evoked response). All gains are
// non-negative; what tells MI and MA apart downstream is response latency
// (see synthesize_recording), since the GAF encoding is insensitive to sign
// and overall amplitude.
std::map<Task, std::vector<double>> default_class_gains(std::size_t n_channels);

// Canonical double-gamma haemodynamic response (peak near 6 s, undershoot
// near 15 s), sampled at t seconds. Zero for t < 0.
double canonical_hrf(double t);

// Deterministic synthetic recording: per trial, an HRF convolved with a 10 s
// task boxcar, scaled by the class/channel gain, written into wl1 (and with
// factor -0.3 into wl2); plus white Gaussian noise of noise_sd and two
// sinusoidal drift components (0.005 Hz and 0.5 Hz) of drift_amplitude with
// per-channel random phases. MA trials engage the boxcar 6 s after the
// marker; MI and IS engage immediately. Identical config => bit-identical
// recording.
Recording synthesize_recording(const SynthesisConfig& cfg);

}  // namespace nirsgaf::ingest
