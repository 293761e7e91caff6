#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "forma/error.hpp"
#include "forma/text.hpp"

namespace forma {

// Reserved symbols. ⟨unk⟩ stands in for out-of-vocabulary tokens; the
// sentence markers only ever appear in model files, never in corpora.
inline constexpr std::string_view kUnkToken = "⟨unk⟩";
inline constexpr std::string_view kBosToken = "⟨s⟩";
inline constexpr std::string_view kEosToken = "⟨/s⟩";

// Escape marker prepended to data tokens that would collide with a reserved
// symbol: U+200B ZERO WIDTH SPACE.
inline constexpr std::string_view kEscapeMarker = "​";

inline bool is_reserved_token(std::string_view tok) {
    return tok == kUnkToken || tok == kBosToken || tok == kEosToken;
}

// Escapes whole-token occurrences of reserved symbols by prefixing the
// zero-width marker. Lines without collisions are returned unchanged,
// byte for byte.
inline std::string escape_reserved(std::string_view line) {
    size_t i = 0;
    const size_t n = line.size();
    bool collision = false;
    while (i < n && !collision) {
        while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
        size_t start = i;
        while (i < n && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start && is_reserved_token(line.substr(start, i - start))) collision = true;
    }
    if (!collision) return std::string(line);
    std::string out;
    out.reserve(n + 8);
    i = 0;
    while (i < n) {
        while (i < n && (line[i] == ' ' || line[i] == '\t')) out += line[i++];
        size_t start = i;
        while (i < n && line[i] != ' ' && line[i] != '\t') ++i;
        std::string_view tok = line.substr(start, i - start);
        if (is_reserved_token(tok)) out += kEscapeMarker;
        out.append(tok);
    }
    return out;
}

// Reads all lines of a UTF-8 file. A trailing final newline is optional;
// CR before LF is stripped.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (in.bad()) throw IoError("read failure: " + path);
    return lines;
}

// Corpus text loader: read_lines plus reserved-symbol escaping.
inline std::vector<std::string> read_corpus_lines(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    for (auto& l : lines) l = escape_reserved(l);
    return lines;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    for (const auto& l : lines) {
        out << l << '\n';
    }
    if (!out) throw IoError("write failure: " + path);
}

inline std::vector<std::string> split_tsv(std::string_view line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string(s.substr(b, e - b));
}

// Shortest round-trip decimal representation; identical doubles always
// format identically, which artifact determinism relies on.
inline std::string fmt_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return std::string(buf);
}

inline double parse_real(std::string_view s, std::string_view what) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("bad real value for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

inline int64_t parse_int(std::string_view s, std::string_view what) {
    int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw DataError("bad integer value for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

inline uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace forma
