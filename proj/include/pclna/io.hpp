#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pclna {

/// Locale-independent formatting with 17 significant digits (round-trips).
std::string format_double(double value);

/// Strict locale-independent parse; the whole (trimmed) token must be consumed.
bool parse_double(std::string_view text, double& out);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace pclna
