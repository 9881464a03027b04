#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lexjudge::util {

std::vector<std::string> split_csv_list(const std::string& text);

// Renders a score scaled by 100 with one decimal, half-up: 0.6795 -> "68.0".
std::string format_score_1dp(double value);

// "mean ± std" cell text, both one decimal, e.g. "68.0 ± 2.0".
std::string format_cell(double mean, double stddev);

// Two decimals with the leading zero dropped: 0.02 -> ".02", 1.5 -> "1.50".
std::string format_dotted_2dp(double value);

// Half-up rounding of value to `decimals` places.
double round_half_up(double value, int decimals);

std::uint64_t file_digest(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace lexjudge::util
