#include "nirsgaf/csvio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "nirsgaf/errors.hpp"

namespace nirsgaf::csv {

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw MissingColumn(name);
}

bool Table::has_column(const std::string& name) const {
    for (const auto& h : header)
        if (h == name) return true;
    return false;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string cell = (comma == std::string::npos) ? line.substr(start)
                                                        : line.substr(start, comma - start);
        // trim surrounding whitespace
        std::size_t b = cell.find_first_not_of(" \t");
        std::size_t e = cell.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

static std::string chomp(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    Table t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file: " + path);
    t.header = split_line(chomp(line));

    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        line = chomp(line);
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != t.header.size())
            throw DataError(path + ": row " + std::to_string(row_index) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(t.header.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& cell = cells[c];
            double v{};
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || p != cell.data() + cell.size())
                throw NonNumericCell(row_index, c, cell);
            vals[c] = v;
        }
        t.rows.push_back(std::move(vals));
        ++row_index;
    }
    return t;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_table(const std::string& path, const Table& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << ',';
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace nirsgaf::csv
