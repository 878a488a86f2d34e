#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bsn {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key=value` text: one pair per line, blank lines and `#` comments
/// ignored, whitespace around keys and values trimmed. Later keys win.
class KeyValues {
public:
    KeyValues() = default;

    static KeyValues parse(std::istream& in);
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> find(const std::string& key) const;
    std::string get(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split(const std::string& text, char sep);
double parse_double(const std::string& text);
std::uint64_t parse_u64(const std::string& text);

}  // namespace bsn
