#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gascast::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a column, or -1 when absent.
    int column(const std::string& name) const;
};

std::vector<std::string> split_line(const std::string& line, char delim = ',');

// Reads a headered delimited-text file. Throws DataError if the file is
// missing or empty.
Table read_table(const std::string& path, char delim = ',');

// Parses a field as double; empty fields map to nullopt (absent value).
std::optional<double> parse_field(const std::string& field);

void write_table(const std::string& path, const Table& table, char delim = ',');

}  // namespace gascast::csv
