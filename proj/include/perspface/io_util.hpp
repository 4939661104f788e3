#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace perspface {

/// Writes `contents` to a sibling temp file and renames it over `path`.
/// Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Throws IoError if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// printf-style "%.{digits}g".
std::string format_significant(double value, int digits);

/// Shortest decimal that parses back to exactly `value`.
std::string format_shortest(double value);

}  // namespace perspface
