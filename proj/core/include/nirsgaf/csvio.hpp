// Minimal CSV reading/writing for the recording, epoch, feature and image
// files. UTF-8, '.' decimal separator, LF or CRLF line endings. Numbers are
// written with 17 significant digits so a write/read round trip is bit-exact.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace nirsgaf::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;  // throws MissingColumn
    bool has_column(const std::string& name) const;
};

// Parses a numeric CSV with a header row. Throws NonNumericCell with the
// 0-based data row and column of the first unparseable cell.
Table read_table(const std::string& path);

void write_table(const std::string& path, const Table& table);

// One double formatted with up to 17 significant digits ("%.17g").
std::string format_double(double v);

std::vector<std::string> split_line(const std::string& line);

}  // namespace nirsgaf::csv
