#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace advrl {

inline constexpr std::string_view kVersion = "advrl 1.0.0";

/// Shortest round-trip-safe text for a double: 17 significant digits, '.' separator.
std::string format_double(double value);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace advrl
