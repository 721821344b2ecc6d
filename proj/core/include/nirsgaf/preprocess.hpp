// Optical density -> haemoglobin conversion, zero-phase band-pass filtering,
// epoch segmentation and baseline correction.
//
// The band-pass is a digital Butterworth realized as cascaded second-order
// sections: analog prototype poles, low-pass-to-band-pass transform with
// frequency pre-warping, then the bilinear transform. Sections keep the
// design numerically sound at the very low normalized passband used here
// (0.01-0.09 Hz at 13.3 Hz sampling puts poles at radius up to ~0.998).
//
// filtfilt applies the causal cascade forward-backward over odd-reflection
// padding, and averages that with the same scheme run on the reversed input.
// The average makes time-reversal symmetry exact by construction; a single
// ordering cannot meet it at this band, where edge transients decay too
// slowly to clear any practical signal length.
#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "nirsgaf/recording.hpp"

namespace nirsgaf::preprocess {

struct FilterSpec {
    int order = 3;
    double passband_low_hz = 0.01;
    double passband_high_hz = 0.09;
};

// One second-order section; denominator normalized so a0 = 1.
struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

struct SosCascade {
    std::vector<Biquad> sections;

    // H(e^{i 2 pi f / fs}) of the whole cascade.
    std::complex<double> response_at(double freq_hz, double sample_rate_hz) const;
    double gain_at(double freq_hz, double sample_rate_hz) const {
        return std::abs(response_at(freq_hz, sample_rate_hz));
    }

    // Reflection padding per edge used by filtfilt: 3 x (2 x sections).
    std::size_t pad_length() const { return 3 * 2 * sections.size(); }
};

// Digital band-pass from the analog Butterworth prototype of the given
// order. All poles strictly inside the unit circle. Throws InvalidBand when
// the edges are out of (0, fs/2) or collapse after pre-warping.
SosCascade butterworth_bandpass(const FilterSpec& spec, double sample_rate_hz);

// Single causal pass through the cascade (direct form II transposed, zero
// initial state).
std::vector<double> sos_filter(const SosCascade& cascade, const std::vector<double>& x);

// Zero-phase filtering; output length equals input length. Throws
// SeriesTooShort when x is shorter than 3 x pad_length() + 1.
std::vector<double> filtfilt(const SosCascade& cascade, const std::vector<double>& x);

// --- modified Beer-Lambert ------------------------------------------------

struct BeerLambertCoefficients {
    // rows = wavelengths, cols = {HbO, HbR}
    double extinction[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    double dpf[2] = {1.0, 1.0};
    double source_detector_distance = 1.0;

    static BeerLambertCoefficients identity() { return {}; }
    // JSON file: {"extinction": [[..,..],[..,..]], "dpf": [..,..],
    //             "source_detector_distance": ..}. "identity" is accepted in
    // place of a path.
    static BeerLambertCoefficients load(const std::string& path_or_identity);
};

struct HbSeries {
    std::string channel_id;
    std::vector<double> hbo;
    std::vector<double> hbr;
};

// Per sample, solves  diag(dpf_i * distance) * E * [hbo, hbr]^T = [od1, od2]^T.
// Linear in the input; throws SingularCoefficients when E is not invertible.
HbSeries od_to_hb(const ChannelSeries& series, const BeerLambertCoefficients& coeff);

// --- epochs ---------------------------------------------------------------

struct Epoch {
    std::size_t trial_index = 0;
    Task task = Task::MI;
    double t_start_s = -kEpochPreSeconds;
    double t_end_s = kEpochPostSeconds;
    double sample_rate_hz = 13.3;
    long start_offset = 0;  // sample i lies at absolute sample onset + start_offset + i
    std::vector<HbSeries> channels;

    std::size_t n_samples() const { return channels.empty() ? 0 : channels[0].hbo.size(); }
    // time of sample i relative to trial onset, on the exact sample grid
    double time_at(std::size_t i) const {
        return (static_cast<double>(start_offset) + static_cast<double>(i)) / sample_rate_hz;
    }
};

// Expected epoch sample count: round(30 s x rate) + 1 (inclusive endpoints).
std::size_t epoch_length(double sample_rate_hz);

// One epoch per marker covering [-5, 25] s around its onset.
std::vector<Epoch> segment_epochs(const std::vector<HbSeries>& channels,
                                  const std::vector<TrialMarker>& markers,
                                  double sample_rate_hz);

// Subtracts the [-1, 0] s pre-stimulus mean from every channel and signal.
// Idempotent; the corrected window mean is 0 to ~1e-12.
Epoch baseline_correct(Epoch epoch);

// Full chain on one recording: od_to_hb, filtfilt per channel/signal,
// segment, baseline-correct.
std::vector<Epoch> preprocess_recording(const Recording& rec,
                                        const BeerLambertCoefficients& coeff,
                                        const FilterSpec& filter);

// --- epoch directory I/O ---------------------------------------------------
//
// <dir>/epoch_<index>.csv   columns t, <ch>_hbo, <ch>_hbr, ... (17 digits)
// <dir>/labels.csv          columns epoch,task,start_offset,sample_rate_hz

void write_epochs_dir(const std::string& dir, const std::vector<Epoch>& epochs);
std::vector<Epoch> read_epochs_dir(const std::string& dir);

// Single epoch file without the labels sidecar (classify input); task is
// left at MI and metadata comes from the time column.
Epoch read_epoch_csv(const std::string& path);

}  // namespace nirsgaf::preprocess
