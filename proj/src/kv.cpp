#include "bsn/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bsn {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        }
        kv.values_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

KeyValues KeyValues::parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    return parse(in);
}

std::optional<std::string> KeyValues::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string KeyValues::get(const std::string& key) const {
    auto v = find(key);
    if (!v) {
        throw ConfigError("missing key '" + key + "'");
    }
    return *v;
}

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key) const {
    try {
        return parse_double(get(key));
    } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t KeyValues::get_u64(const std::string& key) const {
    try {
        return parse_u64(get(key));
    } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    if (trim(text).empty()) {
        return out;
    }
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    return out;
}

double parse_double(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) {
        throw ConfigError("not a number: '" + text + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("not an unsigned integer: '" + text + "'");
    }
    return v;
}

}  // namespace bsn
