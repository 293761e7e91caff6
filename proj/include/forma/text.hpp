#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace forma {

// Splits on runs of whitespace. Case-sensitive, no normalization; empty
// input yields an empty sequence.
inline std::vector<std::string> tokenize(std::string_view sentence) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = sentence.size();
    while (i < n) {
        while (i < n && (sentence[i] == ' ' || sentence[i] == '\t')) ++i;
        size_t start = i;
        while (i < n && sentence[i] != ' ' && sentence[i] != '\t') ++i;
        if (i > start) out.emplace_back(sentence.substr(start, i - start));
    }
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

// Collapses whitespace runs to single spaces and trims the ends. Used as the
// canonical join key for source-side matching.
inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // leading spaces dropped
    for (char c : s) {
        if (c == ' ' || c == '\t') {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

namespace utf8 {

struct Decoded {
    uint32_t cp;     // codepoint, or the raw byte value when invalid
    int length;      // bytes consumed (1..4)
    bool valid;
};

// Decodes the codepoint starting at s[i]. Invalid sequences are consumed one
// byte at a time so that byte content is never lost.
inline Decoded decode(std::string_view s, size_t i) {
    const auto byte = [&](size_t j) { return static_cast<unsigned char>(s[j]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) return {b0, 1, true};
    auto cont = [&](size_t j) { return j < s.size() && (byte(j) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        uint32_t cp = (uint32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
        if (cp >= 0x80) return {cp, 2, true};
    } else if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        uint32_t cp = (uint32_t(b0 & 0x0F) << 12) | (uint32_t(byte(i + 1) & 0x3F) << 6) |
                      (byte(i + 2) & 0x3F);
        if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) return {cp, 3, true};
    } else if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        uint32_t cp = (uint32_t(b0 & 0x07) << 18) | (uint32_t(byte(i + 1) & 0x3F) << 12) |
                      (uint32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
        if (cp >= 0x10000 && cp <= 0x10FFFF) return {cp, 4, true};
    }
    return {b0, 1, false};
}

inline void encode(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out += char(cp);
    } else if (cp < 0x800) {
        out += char(0xC0 | (cp >> 6));
        out += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += char(0xE0 | (cp >> 12));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    } else {
        out += char(0xF0 | (cp >> 18));
        out += char(0x80 | ((cp >> 12) & 0x3F));
        out += char(0x80 | ((cp >> 6) & 0x3F));
        out += char(0x80 | (cp & 0x3F));
    }
}

}  // namespace utf8

enum class CaseClass { Upper, Lower, Uncased };

// Case class of a codepoint. Covers ASCII, Latin-1 supplement, Greek and
// Cyrillic; everything else is Uncased and matches any class.
inline CaseClass case_class(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return CaseClass::Upper;
    if (cp >= 'a' && cp <= 'z') return CaseClass::Lower;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return CaseClass::Upper;
    if ((cp >= 0xDF && cp <= 0xFF && cp != 0xF7)) return CaseClass::Lower;
    if (cp >= 0x391 && cp <= 0x3A9) return CaseClass::Upper;   // Greek
    if (cp >= 0x3B1 && cp <= 0x3C9) return CaseClass::Lower;
    if (cp == 0x401 || (cp >= 0x410 && cp <= 0x42F)) return CaseClass::Upper;  // Cyrillic
    if (cp == 0x451 || (cp >= 0x430 && cp <= 0x44F)) return CaseClass::Lower;
    return CaseClass::Uncased;
}

inline CaseClass first_char_case_class(std::string_view s) {
    if (s.empty()) return CaseClass::Uncased;
    return case_class(utf8::decode(s, 0).cp);
}

// ASCII + Latin-1 lowercasing, sufficient for near-duplicate keys.
inline std::string lowercase_latin(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        auto d = utf8::decode(s, i);
        uint32_t cp = d.cp;
        if (d.valid) {
            if (cp >= 'A' && cp <= 'Z') cp += 32;
            else if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) cp += 32;
            utf8::encode(cp, out);
        } else {
            out += s[i];
        }
        i += d.length;
    }
    return out;
}

}  // namespace forma
