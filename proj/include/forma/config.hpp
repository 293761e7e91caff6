#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forma/error.hpp"
#include "forma/io.hpp"

namespace forma {

// key=value configuration. Lines starting with '#' and blank lines are
// ignored; whitespace around keys and values is trimmed.
class Config {
public:
    Config() = default;

    static Config parse_text(const std::vector<std::string>& lines) {
        Config cfg;
        for (size_t i = 0; i < lines.size(); ++i) {
            std::string line = trim(lines[i]);
            if (line.empty() || line[0] == '#') continue;
            size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw DataError("config line " + std::to_string(i + 1) + ": expected key=value");
            std::string key = trim(std::string_view(line).substr(0, eq));
            std::string value = trim(std::string_view(line).substr(eq + 1));
            if (key.empty())
                throw DataError("config line " + std::to_string(i + 1) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config load(const std::string& path) { return parse_text(read_lines(path)); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw UsageError("missing config key: " + key);
        return it->second;
    }

    std::string get_or(const std::string& key, std::string_view def) const {
        auto it = values_.find(key);
        return it == values_.end() ? std::string(def) : it->second;
    }

    int64_t get_int_or(const std::string& key, int64_t def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        return parse_int(it->second, key);
    }

    double get_real_or(const std::string& key, double def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        return parse_real(it->second, key);
    }

    bool get_bool_or(const std::string& key, bool def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw UsageError("config key " + key + ": expected boolean, got '" + v + "'");
    }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    // Sorted key=value text with the given keys removed. Hash input for the
    // run fingerprint; keys that cannot affect results (thread count) are
    // excluded by the caller.
    std::string canonical(const std::vector<std::string>& exclude = {}) const {
        std::string out;
        for (const auto& [k, v] : values_) {
            if (std::find(exclude.begin(), exclude.end(), k) != exclude.end()) continue;
            out += k;
            out += '=';
            out += v;
            out += '\n';
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace forma
