#include "lifetest/util/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lifetest/core/error.hpp"

namespace lifetest::csv {

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{} || res.ptr != end)
        raise(Errc::ParseError, "bad number '" + text + "' (" + context + ")");
    return value;
}

std::size_t Table::column(const std::string& name, const std::string& context) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    raise(Errc::SchemaError, "missing column '" + name + "' (" + context + ")");
}

Table read_table(const std::filesystem::path& path, char delimiter) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::ParseError, "cannot open " + path.string());

    Table table;
    std::string line;
    std::size_t line_no = 0;
    auto split = [&](const std::string& text) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream stream(text);
        while (std::getline(stream, field, delimiter)) fields.push_back(field);
        if (!text.empty() && text.back() == delimiter) fields.emplace_back();
        return fields;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split(line);
        if (line_no == 1) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size())
            raise(Errc::ParseError, path.string() + ":" + std::to_string(line_no) +
                                        ": expected " + std::to_string(table.header.size()) +
                                        " fields, got " + std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
    }
    if (table.header.empty())
        raise(Errc::ParseError, path.string() + ": missing header row");
    return table;
}

void write_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns) {
    if (columns.empty() || header.size() != columns.size())
        raise(Errc::ConfigError, "write_columns: header/column mismatch");
    const Eigen::Index n = columns.front().size();
    for (const Eigen::VectorXd& col : columns)
        if (col.size() != n)
            raise(Errc::LengthMismatch, "write_columns: unequal column lengths");

    std::ofstream out(path);
    if (!out)
        raise(Errc::IoError, "cannot write " + path.string());
    for (std::size_t c = 0; c < header.size(); ++c)
        out << header[c] << (c + 1 < header.size() ? "," : "\n");
    for (Eigen::Index r = 0; r < n; ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << format_double(columns[c][r]) << (c + 1 < columns.size() ? "," : "\n");
    if (!out)
        raise(Errc::IoError, "write failed for " + path.string());
}

}  // namespace lifetest::csv
