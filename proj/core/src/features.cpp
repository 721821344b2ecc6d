#include "nirsgaf/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "nirsgaf/csvio.hpp"
#include "nirsgaf/errors.hpp"
#include "nirsgaf/rng.hpp"

namespace nirsgaf::features {

namespace {

constexpr double kWindow1Start = 5.0;
constexpr double kWindow1End = 10.0;
constexpr double kWindow2Start = 10.0;
constexpr double kWindow2End = 15.0;

// Mean of `signal` over samples whose timestamp falls in [start, end).
double window_mean(const preprocess::Epoch& epoch, const std::vector<double>& signal,
                   double start, double end) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < signal.size(); ++i) {
        const double t = epoch.time_at(i);
        if (t >= start && t < end) {
            sum += signal[i];
            ++count;
        }
    }
    if (count == 0) throw DataError("epoch has no samples in feature window");
    return sum / static_cast<double>(count);
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& y) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

}  // namespace

FeatureVector extract_features(const preprocess::Epoch& epoch) {
    FeatureVector fv;
    fv.label = epoch.task;
    fv.values.reserve(4 * epoch.channels.size());
    fv.names.reserve(4 * epoch.channels.size());
    for (const auto& ch : epoch.channels) {
        fv.values.push_back(window_mean(epoch, ch.hbo, kWindow1Start, kWindow1End));
        fv.values.push_back(window_mean(epoch, ch.hbo, kWindow2Start, kWindow2End));
        fv.values.push_back(window_mean(epoch, ch.hbr, kWindow1Start, kWindow1End));
        fv.values.push_back(window_mean(epoch, ch.hbr, kWindow2Start, kWindow2End));
        fv.names.push_back(ch.channel_id + "_hbo_w1");
        fv.names.push_back(ch.channel_id + "_hbo_w2");
        fv.names.push_back(ch.channel_id + "_hbr_w1");
        fv.names.push_back(ch.channel_id + "_hbr_w2");
    }
    return fv;
}

FeatureMatrix feature_matrix(const std::vector<preprocess::Epoch>& epochs) {
    if (epochs.empty()) throw EmptyDataset("feature_matrix: no epochs");
    FeatureMatrix m;
    const auto first = extract_features(epochs.front());
    m.names = first.names;
    const std::size_t d = first.values.size();
    m.X = Tensor({epochs.size(), d});
    m.y.resize(epochs.size());
    for (std::size_t r = 0; r < epochs.size(); ++r) {
        const auto fv = (r == 0) ? first : extract_features(epochs[r]);
        if (fv.values.size() != d)
            throw DimensionMismatch("feature_matrix: inconsistent feature count");
        std::copy(fv.values.begin(), fv.values.end(), m.X.data.begin() + r * d);
        m.y[r] = static_cast<int>(fv.label);
    }
    return m;
}

ImportanceReport permutation_importance(const PredictFn& predict, const Tensor& X,
                                        const std::vector<int>& y,
                                        const std::vector<std::string>& names,
                                        std::size_t repeats, uint64_t seed) {
    if (X.shape.size() != 2) throw DimensionMismatch("permutation_importance: X must be 2-D");
    const std::size_t n = X.shape[0], d = X.shape[1];
    if (y.size() != n) throw DimensionMismatch("permutation_importance: |y| != rows of X");
    if (names.size() != d)
        throw DimensionMismatch("permutation_importance: |names| != columns of X");
    if (n == 0) throw EmptyDataset("permutation_importance: empty matrix");
    if (repeats == 0) throw ConfigError("permutation_importance: repeats must be >= 1");

    const double baseline = accuracy(predict(X), y);

    ImportanceReport report;
    report.ranking.reserve(d);
    std::vector<std::size_t> perm(n);
    for (std::size_t f = 0; f < d; ++f) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
            // One substream per (feature, repeat) pair so repeats are
            // order-independent and reproducible.
            Rng rng = Rng(seed).derive((static_cast<uint64_t>(f) << 32) | r);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            rng.shuffle(perm);
            Tensor shuffled = X;
            for (std::size_t i = 0; i < n; ++i)
                shuffled.data[i * d + f] = X.data[perm[i] * d + f];
            const double drop = baseline - accuracy(predict(shuffled), y);
            sum += drop;
            sumsq += drop * drop;
        }
        const double mean = sum / static_cast<double>(repeats);
        const double var =
            std::max(0.0, sumsq / static_cast<double>(repeats) - mean * mean);
        report.ranking.push_back({names[f], mean, std::sqrt(var)});
    }
    std::sort(report.ranking.begin(), report.ranking.end(),
              [](const FeatureImportance& a, const FeatureImportance& b) {
                  if (a.mean != b.mean) return a.mean > b.mean;
                  return a.name < b.name;
              });
    return report;
}

std::string channel_of_feature(const std::string& feature_name) {
    static const char* kSuffixes[] = {"_hbo_w1", "_hbo_w2", "_hbr_w1", "_hbr_w2"};
    for (const char* s : kSuffixes) {
        const std::string suffix(s);
        if (feature_name.size() > suffix.size() &&
            feature_name.compare(feature_name.size() - suffix.size(), suffix.size(), suffix) ==
                0)
            return feature_name.substr(0, feature_name.size() - suffix.size());
    }
    throw DataError("unrecognized feature name: " + feature_name);
}

std::string select_channel(const ImportanceReport& report) {
    if (report.ranking.empty()) throw EmptyDataset("select_channel: empty report");
    const double top = report.ranking.front().mean;
    std::string best;
    for (const auto& fi : report.ranking) {
        if (fi.mean != top) continue;
        const std::string ch = channel_of_feature(fi.name);
        if (best.empty() || ch < best) best = ch;
    }
    return best;
}

void write_features_csv(const std::string& path, const FeatureMatrix& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& name : m.names) out << name << ',';
    out << "label\n";
    const std::size_t d = m.names.size();
    for (std::size_t r = 0; r < m.X.shape[0]; ++r) {
        for (std::size_t c = 0; c < d; ++c) out << csv::format_double(m.X.data[r * d + c]) << ',';
        out << task_name(static_cast<Task>(m.y[r])) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

FeatureMatrix read_features_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = csv::split_line(line);
    if (header.empty() || header.back() != "label")
        throw DataError(path + ": last column must be 'label'");
    FeatureMatrix m;
    m.names.assign(header.begin(), header.end() - 1);
    const std::size_t d = m.names.size();

    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = csv::split_line(line);
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        for (std::size_t c = 0; c < d; ++c) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
            if (ec != std::errc{} || p != cells[c].data() + cells[c].size())
                throw NonNumericCell(row, c, cells[c]);
            values.push_back(v);
        }
        m.y.push_back(static_cast<int>(task_from_name(cells[d])));
        ++row;
    }
    if (row == 0) throw EmptyDataset(path + ": no feature rows");
    m.X = Tensor({row, d}, std::move(values));
    return m;
}

void write_importance_csv(const std::string& path, const ImportanceReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "feature,importance_mean,importance_sd\n";
    for (const auto& fi : report.ranking)
        out << fi.name << ',' << csv::format_double(fi.mean) << ','
            << csv::format_double(fi.sd) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

ImportanceReport read_importance_csv(const std::string& path) {
    const auto lines = [&] {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path);
        std::vector<std::string> ls;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) ls.push_back(line);
        }
        return ls;
    }();
    if (lines.empty()) throw IoError("empty file: " + path);
    ImportanceReport report;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = csv::split_line(lines[i]);
        if (cells.size() != 3)
            throw DataError(path + ": row " + std::to_string(i - 1) + " has " +
                            std::to_string(cells.size()) + " cells, expected 3");
        FeatureImportance fi;
        fi.name = cells[0];
        for (int c = 1; c <= 2; ++c) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
            if (ec != std::errc{} || p != cells[c].data() + cells[c].size())
                throw NonNumericCell(i - 1, static_cast<std::size_t>(c), cells[c]);
            (c == 1 ? fi.mean : fi.sd) = v;
        }
        report.ranking.push_back(std::move(fi));
    }
    return report;
}

}  // namespace nirsgaf::features
