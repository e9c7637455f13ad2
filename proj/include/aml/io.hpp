#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace aml::io {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);

std::vector<std::string_view> split_csv_line(std::string_view line);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace aml::io
