#include "lexjudge/util.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lexjudge/error.hpp"
#include "lexjudge/rng.hpp"

namespace lexjudge::util {

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        std::size_t a = item.find_first_not_of(" \t");
        std::size_t b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

double round_half_up(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    if (value >= 0.0) return std::floor(value * scale + 0.5) / scale;
    return -std::floor(-value * scale + 0.5) / scale;
}

std::string format_score_1dp(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", round_half_up(value * 100.0, 1));
    return buf;
}

std::string format_cell(double mean, double stddev) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", round_half_up(mean * 100.0, 1),
                  round_half_up(stddev * 100.0, 1));
    return buf;
}

std::string format_dotted_2dp(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", round_half_up(value, 2));
    std::string s = buf;
    if (s.rfind("0.", 0) == 0) return s.substr(1);
    if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
    return s;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open file for digest: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (!in) break;
    }
    return h;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write file: " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::Io, "short write: " + path.string());
}

}  // namespace lexjudge::util
