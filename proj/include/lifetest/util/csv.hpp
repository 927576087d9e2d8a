#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace lifetest::csv {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict double parse of a full field; raises ParseError with context.
double parse_double(const std::string& text, const std::string& context);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by header name; raises SchemaError when absent.
    std::size_t column(const std::string& name, const std::string& context) const;
};

/// Reads a CSV file: mandatory header row, comma separated, no quoting
/// (the canonical formats never need it). Raises ParseError / IoError.
Table read_table(const std::filesystem::path& path, char delimiter = ',');

/// Writes columns of equal length under the given header names.
void write_columns(const std::filesystem::path& path, const std::vector<std::string>& header,
                   const std::vector<Eigen::VectorXd>& columns);

}  // namespace lifetest::csv
