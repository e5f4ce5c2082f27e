#pragma once

#include <charconv>
#include <map>
#include <set>
#include <string>

#include "mpcad/core.hpp"
#include "mpcad/csv.hpp"

namespace mpcad {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// `key = value` configuration text. Blank lines and `#` comments (full-line
// or trailing) are ignored. Readers mark keys as consumed; whatever is left
// after a consumer finishes is an unknown key and gets rejected, so typos
// fail loudly instead of silently keeping a default.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text) {
        Config c;
        detail::LineScanner sc{text};
        std::string line;
        while (sc.next(line)) {
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = detail::trim(line);
            if (t.empty()) continue;
            std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw config_error(t, "expected key = value");
            std::string key = detail::trim(t.substr(0, eq));
            std::string value = detail::trim(t.substr(eq + 1));
            if (key.empty()) throw config_error(t, "empty key");
            if (c.values_.count(key)) throw config_error(key, "duplicate key");
            c.values_[key] = value;
        }
        return c;
    }

    static Config load(const std::string& path) { return parse(detail::read_text_file(path)); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        double v = 0;
        const char* first = it->second.data();
        const char* last = first + it->second.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) throw config_error(key, "expected a number, got '" + it->second + "'");
        return v;
    }

    int get_int(const std::string& key, int fallback) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        int v = 0;
        const char* first = it->second.data();
        const char* last = first + it->second.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            throw config_error(key, "expected an integer, got '" + it->second + "'");
        return v;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::uint64_t v = 0;
        const char* first = it->second.data();
        const char* last = first + it->second.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            throw config_error(key, "expected a non-negative integer, got '" + it->second + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw config_error(key, "expected a boolean, got '" + v + "'");
    }

    // Call after all known keys were read; throws on the first leftover.
    void reject_unconsumed() const {
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key)) throw config_error(key, "unknown key");
    }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

}  // namespace mpcad
