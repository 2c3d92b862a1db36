#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tdid/error.hpp"

namespace tdid::text {

/// 17 significant digits; round-trips every double.
inline std::string format_real(double x) {
    if (x == 0.0) return "0";  // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.' || c == '+';
}

inline bool is_name(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!is_name_char(c)) return false;
    return true;
}

struct Line {
    int number = 0;
    std::vector<std::string> tokens;
};

/// Splits text into non-empty lines of tokens. `#` starts a comment; the
/// punctuation `: ; | ,` always forms its own token.
inline std::vector<Line> tokenize(std::string_view input) {
    std::vector<Line> out;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= input.size()) {
        std::size_t nl = input.find('\n', pos);
        if (nl == std::string_view::npos) nl = input.size();
        std::string_view raw = input.substr(pos, nl - pos);
        ++number;
        pos = nl + 1;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        Line line{number, {}};
        std::string cur;
        auto flush = [&] {
            if (!cur.empty()) line.tokens.push_back(std::move(cur));
            cur.clear();
        };
        for (char c : raw) {
            if (c == ' ' || c == '\t' || c == '\r') {
                flush();
            } else if (c == ':' || c == ';' || c == '|' || c == ',') {
                flush();
                line.tokens.emplace_back(1, c);
            } else {
                cur.push_back(c);
            }
        }
        flush();
        if (!line.tokens.empty()) out.push_back(std::move(line));
        if (nl == input.size()) break;
    }
    return out;
}

inline double parse_real(const std::string& tok, int line) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE)
        throw ParseError(line, "expected a number, got '" + tok + "'");
    return v;
}

inline long parse_int(const std::string& tok, int line) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE)
        throw ParseError(line, "expected an integer, got '" + tok + "'");
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace tdid::text
