#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace zpm::io {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Parses a whole field as a double; throws Error(Io) on junk.
double parse_double(std::string_view text);

/// Splits one CSV line on commas (no quoting; none of our files need it).
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_text(const std::filesystem::path& path);

/// Writes via a temporary file and rename so readers never see a partial file.
void write_text(const std::filesystem::path& path, std::string_view text);

/// Two-column CSV with the given header; rows are (x, y).
std::string xy_csv(std::string_view header, const std::vector<double>& x, const std::vector<double>& y);

}  // namespace zpm::io
