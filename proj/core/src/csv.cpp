#include "gascast/csv.hpp"

#include <charconv>
#include <fstream>

#include "gascast/errors.hpp"

namespace gascast::csv {

int Table::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(delim, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

Table read_table(const std::string& path, char delim) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_line(line, delim);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.rows.push_back(split_line(line, delim));
    }
    return t;
}

std::optional<double> parse_field(const std::string& field) {
    if (field.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError("unparseable numeric field: '" + field + "'");
    return value;
}

void write_table(const std::string& path, const Table& table, char delim) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << delim;
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << delim;
            out << row[i];
        }
        out << '\n';
    }
}

}  // namespace gascast::csv
