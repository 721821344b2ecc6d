#include "nirsgaf/ingest.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nirsgaf/csvio.hpp"
#include "nirsgaf/errors.hpp"

namespace fs = std::filesystem;

namespace nirsgaf::ingest {

Recording load_recording(const std::string& data_csv, const std::string& markers_csv,
                         const RecordingFormat& fmt, double sample_rate_hz,
                         const std::string& subject_id) {
    csv::Table data = csv::read_table(data_csv);

    if (!data.has_column(fmt.time_column)) throw MissingColumn(fmt.time_column);

    Recording rec;
    rec.subject_id = subject_id;
    rec.sample_rate_hz = sample_rate_hz;

    // discover channels from `<ch>_wl1` columns, in header order
    std::vector<std::pair<std::size_t, std::size_t>> cols;  // (wl1, wl2)
    for (std::size_t i = 0; i < data.header.size(); ++i) {
        const std::string& name = data.header[i];
        if (name.size() > fmt.wl1_suffix.size() &&
            name.compare(name.size() - fmt.wl1_suffix.size(), fmt.wl1_suffix.size(),
                         fmt.wl1_suffix) == 0) {
            const std::string ch = name.substr(0, name.size() - fmt.wl1_suffix.size());
            const std::string wl2_name = ch + fmt.wl2_suffix;
            if (!data.has_column(wl2_name)) throw MissingColumn(wl2_name);
            rec.channels.push_back({ch, {}, {}});
            cols.emplace_back(i, data.column(wl2_name));
        }
    }
    if (rec.channels.empty()) throw DataError(data_csv + ": no channel columns found");

    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto& ch = rec.channels[c];
        ch.od_wl1.reserve(data.rows.size());
        ch.od_wl2.reserve(data.rows.size());
        for (const auto& row : data.rows) {
            ch.od_wl1.push_back(row[cols[c].first]);
            ch.od_wl2.push_back(row[cols[c].second]);
        }
    }

    // markers.csv mixes a numeric and a textual column, parse it by hand
    {
        std::ifstream in(markers_csv);
        if (!in) throw IoError("cannot open " + markers_csv);
        std::string line;
        if (!std::getline(in, line)) throw IoError("empty file: " + markers_csv);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto header = csv::split_line(line);
        std::size_t onset_col = header.size(), task_col = header.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == fmt.onset_column) onset_col = i;
            if (header[i] == fmt.task_column) task_col = i;
        }
        if (onset_col == header.size()) throw MissingColumn(fmt.onset_column);
        if (task_col == header.size()) throw MissingColumn(fmt.task_column);

        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto cells = csv::split_line(line);
            if (cells.size() != header.size())
                throw DataError(markers_csv + ": row " + std::to_string(row) + " has " +
                                std::to_string(cells.size()) + " cells, header has " +
                                std::to_string(header.size()));
            const std::string& onset_text = cells[onset_col];
            long long onset{};
            auto [p, ec] =
                std::from_chars(onset_text.data(), onset_text.data() + onset_text.size(), onset);
            if (ec != std::errc() || p != onset_text.data() + onset_text.size() || onset < 0)
                throw NonNumericCell(row, onset_col, onset_text);
            rec.markers.push_back(
                {static_cast<std::size_t>(onset), task_from_name(cells[task_col])});
            ++row;
        }
    }

    rec.validate();
    return rec;
}

Recording load_recording_dir(const std::string& dir, const RecordingFormat& fmt) {
    const fs::path p(dir);
    double rate = 13.3;
    std::string subject = fs::path(dir).filename().string();
    const fs::path meta = p / "meta.json";
    if (fs::exists(meta)) {
        std::ifstream in(meta);
        nlohmann::json j;
        in >> j;
        rate = j.value("sample_rate_hz", rate);
        subject = j.value("subject_id", subject);
    }
    return load_recording((p / "recording.csv").string(), (p / "markers.csv").string(), fmt, rate,
                          subject);
}

void write_recording_dir(const std::string& dir, const Recording& rec,
                         const RecordingFormat& fmt) {
    fs::create_directories(dir);
    const fs::path p(dir);

    csv::Table data;
    data.header.push_back(fmt.time_column);
    for (const auto& ch : rec.channels) {
        data.header.push_back(ch.channel_id + fmt.wl1_suffix);
        data.header.push_back(ch.channel_id + fmt.wl2_suffix);
    }
    const std::size_t n = rec.n_samples();
    data.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row;
        row.reserve(1 + 2 * rec.channels.size());
        row.push_back(static_cast<double>(i) / rec.sample_rate_hz);
        for (const auto& ch : rec.channels) {
            row.push_back(ch.od_wl1[i]);
            row.push_back(ch.od_wl2[i]);
        }
        data.rows.push_back(std::move(row));
    }
    csv::write_table((p / "recording.csv").string(), data);

    std::ofstream mk((p / "markers.csv").string());
    if (!mk) throw IoError("cannot write " + (p / "markers.csv").string());
    mk << fmt.onset_column << ',' << fmt.task_column << '\n';
    for (const auto& m : rec.markers) mk << m.onset_sample << ',' << task_name(m.task) << '\n';

    nlohmann::json meta{{"subject_id", rec.subject_id}, {"sample_rate_hz", rec.sample_rate_hz}};
    std::ofstream mo((p / "meta.json").string());
    mo << meta.dump(2) << '\n';
}

}  // namespace nirsgaf::ingest
