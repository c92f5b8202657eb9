#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace flakelens {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Parses a full string as a double; throws ValidationError otherwise.
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string to_lower(std::string_view text);

/// Quotes a CSV field if it contains a separator, quote or newline.
std::string csv_escape(std::string_view field);

/// Splits one CSV line honoring double-quoted fields.
std::vector<std::string> csv_split(std::string_view line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace flakelens
