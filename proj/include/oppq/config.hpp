#pragma once

#include <cctype>
#include <map>
#include <string>

#include "oppq/errors.hpp"
#include "oppq/serialize.hpp"

namespace oppq {

/// Flat view of a structured config: nesting is spelled with dotted keys
/// (param.B=2), values stay decimal strings until a precision scope parses
/// them.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (const char c : k)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
            return false;
    return true;
}

}  // namespace detail

/// key = value lines; '#' starts a comment; blank lines ignored; later keys
/// override earlier ones.
inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    size_t pos = 0;
    long line_no = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string line = nl == std::string::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " has no '='");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!detail::valid_key(key))
            throw ConfigError("bad config key '" + key + "' on line " + std::to_string(line_no));
        if (value.empty())
            throw ConfigError("empty value for '" + key + "' on line " + std::to_string(line_no));
        out[key] = value;
    }
    return out;
}

inline ConfigMap load_config_file(const std::string& path) {
    return parse_config_text(read_file(path));
}

/// CLI flags override file entries.
inline ConfigMap merge_config(ConfigMap base, const ConfigMap& overrides) {
    for (const auto& [k, v] : overrides) base[k] = v;
    return base;
}

/// Canonical one-line-per-key serialization (std::map keeps keys sorted), the
/// basis for config fingerprints.
inline std::string canonical_config(const ConfigMap& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg) out += k + "=" + v + "\n";
    return out;
}

}  // namespace oppq
