#include "nirsgaf/preprocess.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nirsgaf/csvio.hpp"
#include "nirsgaf/errors.hpp"

namespace nirsgaf::preprocess {

BeerLambertCoefficients BeerLambertCoefficients::load(const std::string& path_or_identity) {
    if (path_or_identity == "identity" || path_or_identity.empty()) return identity();
    std::ifstream in(path_or_identity);
    if (!in) throw IoError("cannot open coefficients file " + path_or_identity);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad coefficients file " + path_or_identity + ": " + e.what());
    }
    BeerLambertCoefficients c;
    try {
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) c.extinction[i][k] = j.at("extinction").at(i).at(k);
        c.dpf[0] = j.at("dpf").at(0);
        c.dpf[1] = j.at("dpf").at(1);
        c.source_detector_distance = j.at("source_detector_distance");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad coefficients file " + path_or_identity + ": " + e.what());
    }
    if (c.dpf[0] <= 0 || c.dpf[1] <= 0 || c.source_detector_distance <= 0)
        throw ConfigError("dpf and source_detector_distance must be positive");
    return c;
}

HbSeries od_to_hb(const ChannelSeries& series, const BeerLambertCoefficients& coeff) {
    // scaled system: M = diag(dpf_i * distance) * E
    double m[2][2];
    for (int i = 0; i < 2; ++i) {
        const double s = coeff.dpf[i] * coeff.source_detector_distance;
        m[i][0] = coeff.extinction[i][0] * s;
        m[i][1] = coeff.extinction[i][1] * s;
    }
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double norm2 = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] +
                         m[1][1] * m[1][1];
    if (!(std::abs(det) > 1e-12 * norm2))
        throw SingularCoefficients("extinction matrix is singular (|det| = " +
                                   std::to_string(std::abs(det)) + ")");

    const std::size_t n = series.od_wl1.size();
    if (series.od_wl2.size() != n)
        throw DataError("channel " + series.channel_id + ": wavelength series length differs");

    HbSeries hb;
    hb.channel_id = series.channel_id;
    hb.hbo.resize(n);
    hb.hbr.resize(n);
    const double inv00 = m[1][1] / det, inv01 = -m[0][1] / det;
    const double inv10 = -m[1][0] / det, inv11 = m[0][0] / det;
    for (std::size_t i = 0; i < n; ++i) {
        const double od1 = series.od_wl1[i], od2 = series.od_wl2[i];
        hb.hbo[i] = inv00 * od1 + inv01 * od2;
        hb.hbr[i] = inv10 * od1 + inv11 * od2;
    }
    return hb;
}

std::size_t epoch_length(double rate) {
    return static_cast<std::size_t>(
               std::llround((kEpochPostSeconds + kEpochPreSeconds) * rate)) + 1;
}

std::vector<Epoch> segment_epochs(const std::vector<HbSeries>& channels,
                                  const std::vector<TrialMarker>& markers, double rate) {
    if (rate <= 0.0) throw DataError("sample rate must be positive");
    const std::size_t total = channels.empty() ? 0 : channels[0].hbo.size();
    const long start_offset = std::lround(-kEpochPreSeconds * rate);
    const std::size_t len = epoch_length(rate);

    std::vector<Epoch> epochs;
    epochs.reserve(markers.size());
    for (std::size_t m = 0; m < markers.size(); ++m) {
        const long first = static_cast<long>(markers[m].onset_sample) + start_offset;
        if (first < 0)
            throw MarkerOutOfBounds(m, "epoch window starts before the recording");
        if (static_cast<std::size_t>(first) + len > total)
            throw MarkerOutOfBounds(m, "epoch window runs past the end of the recording");

        Epoch ep;
        ep.trial_index = m;
        ep.task = markers[m].task;
        ep.sample_rate_hz = rate;
        ep.start_offset = start_offset;
        ep.channels.reserve(channels.size());
        for (const auto& ch : channels) {
            HbSeries seg;
            seg.channel_id = ch.channel_id;
            seg.hbo.assign(ch.hbo.begin() + first, ch.hbo.begin() + first + static_cast<long>(len));
            seg.hbr.assign(ch.hbr.begin() + first, ch.hbr.begin() + first + static_cast<long>(len));
            ep.channels.push_back(std::move(seg));
        }
        epochs.push_back(std::move(ep));
    }
    return epochs;
}

Epoch baseline_correct(Epoch epoch) {
    // mean over samples with t in [-1, 0]
    std::size_t lo = 0, hi = 0;
    bool any = false;
    for (std::size_t i = 0; i < epoch.n_samples(); ++i) {
        const double t = epoch.time_at(i);
        if (t >= -1.0 && t <= 0.0) {
            if (!any) lo = i;
            hi = i;
            any = true;
        }
    }
    if (!any) return epoch;
    const double count = static_cast<double>(hi - lo + 1);

    for (auto& ch : epoch.channels) {
        for (auto* sig : {&ch.hbo, &ch.hbr}) {
            double mean = 0.0;
            for (std::size_t i = lo; i <= hi; ++i) mean += (*sig)[i];
            mean /= count;
            for (double& v : *sig) v -= mean;
        }
    }
    return epoch;
}

std::vector<Epoch> preprocess_recording(const Recording& rec,
                                        const BeerLambertCoefficients& coeff,
                                        const FilterSpec& filter) {
    rec.validate();
    const SosCascade cascade = butterworth_bandpass(filter, rec.sample_rate_hz);

    std::vector<HbSeries> filtered;
    filtered.reserve(rec.channels.size());
    for (const auto& ch : rec.channels) {
        HbSeries hb = od_to_hb(ch, coeff);
        hb.hbo = filtfilt(cascade, hb.hbo);
        hb.hbr = filtfilt(cascade, hb.hbr);
        filtered.push_back(std::move(hb));
    }

    auto epochs = segment_epochs(filtered, rec.markers, rec.sample_rate_hz);
    for (auto& ep : epochs) ep = baseline_correct(std::move(ep));
    return epochs;
}

namespace {

std::string epoch_file_name(std::size_t index) {
    std::string n = std::to_string(index);
    while (n.size() < 3) n = "0" + n;
    return "epoch_" + n + ".csv";
}

}  // namespace

void write_epochs_dir(const std::string& dir, const std::vector<Epoch>& epochs) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream labels(dir + "/labels.csv");
        if (!labels) throw IoError("cannot write " + dir + "/labels.csv");
        labels << "epoch,task,start_offset,sample_rate_hz\n";
        for (std::size_t e = 0; e < epochs.size(); ++e)
            labels << e << ',' << task_name(epochs[e].task) << ',' << epochs[e].start_offset
                   << ',' << csv::format_double(epochs[e].sample_rate_hz) << '\n';
        if (!labels) throw IoError("write failed: " + dir + "/labels.csv");
    }
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        const Epoch& ep = epochs[e];
        csv::Table t;
        t.header.push_back("t");
        for (const auto& ch : ep.channels) {
            t.header.push_back(ch.channel_id + "_hbo");
            t.header.push_back(ch.channel_id + "_hbr");
        }
        t.rows.resize(ep.n_samples());
        for (std::size_t i = 0; i < ep.n_samples(); ++i) {
            auto& row = t.rows[i];
            row.reserve(t.header.size());
            row.push_back(ep.time_at(i));
            for (const auto& ch : ep.channels) {
                row.push_back(ch.hbo[i]);
                row.push_back(ch.hbr[i]);
            }
        }
        csv::write_table(dir + "/" + epoch_file_name(e), t);
    }
}

Epoch read_epoch_csv(const std::string& path) {
    const csv::Table t = csv::read_table(path);
    if (t.rows.size() < 2) throw DataError(path + ": epoch needs at least 2 samples");
    const std::size_t t_col = t.column("t");

    Epoch ep;
    const double dt = t.rows[1][t_col] - t.rows[0][t_col];
    if (dt <= 0.0) throw DataError(path + ": time column must be strictly increasing");
    ep.sample_rate_hz = 1.0 / dt;
    ep.start_offset = std::lround(t.rows[0][t_col] * ep.sample_rate_hz);

    for (std::size_t c = 0; c < t.header.size(); ++c) {
        const std::string& h = t.header[c];
        const std::string suffix = "_hbo";
        if (h.size() <= suffix.size() || h.compare(h.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        const std::string id = h.substr(0, h.size() - suffix.size());
        const std::size_t hbr_col = t.column(id + "_hbr");
        HbSeries s;
        s.channel_id = id;
        s.hbo.reserve(t.rows.size());
        s.hbr.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            s.hbo.push_back(row[c]);
            s.hbr.push_back(row[hbr_col]);
        }
        ep.channels.push_back(std::move(s));
    }
    if (ep.channels.empty()) throw DataError(path + ": no <ch>_hbo/<ch>_hbr column pairs");
    return ep;
}

std::vector<Epoch> read_epochs_dir(const std::string& dir) {
    std::ifstream labels(dir + "/labels.csv");
    if (!labels) throw IoError("cannot open " + dir + "/labels.csv");
    std::string line;
    if (!std::getline(labels, line)) throw IoError("empty file: " + dir + "/labels.csv");

    std::vector<Epoch> epochs;
    std::size_t row = 0;
    while (std::getline(labels, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = csv::split_line(line);
        if (cells.size() != 4)
            throw DataError(dir + "/labels.csv: row " + std::to_string(row) +
                            " has " + std::to_string(cells.size()) + " cells, expected 4");
        unsigned long long parsed = 0;
        const auto [p, ec] =
            std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), parsed);
        if (ec != std::errc{} || p != cells[0].data() + cells[0].size())
            throw NonNumericCell(row, 0, cells[0]);
        const auto index = static_cast<std::size_t>(parsed);
        Epoch ep = read_epoch_csv(dir + "/" + epoch_file_name(index));
        ep.trial_index = index;
        ep.task = task_from_name(cells[1]);
        // the sidecar carries the exact metadata; the values derived from the
        // time column are only a fallback for bare epoch files
        long long offset = 0;
        const auto [op, oec] =
            std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), offset);
        if (oec != std::errc{} || op != cells[2].data() + cells[2].size())
            throw NonNumericCell(row, 2, cells[2]);
        ep.start_offset = static_cast<long>(offset);
        char* rate_end = nullptr;
        const double rate = std::strtod(cells[3].c_str(), &rate_end);
        if (rate_end != cells[3].c_str() + cells[3].size() || !(rate > 0.0))
            throw NonNumericCell(row, 3, cells[3]);
        ep.sample_rate_hz = rate;
        epochs.push_back(std::move(ep));
        ++row;
    }
    if (epochs.empty()) throw EmptyDataset(dir + ": no epochs listed");
    return epochs;
}

}  // namespace nirsgaf::preprocess
