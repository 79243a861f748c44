#pragma once

// Flat key = value run configuration with command-line overrides.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace kis::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Where a value came from, for diagnostics.
struct ValueSource {
    std::string origin;  // file path or "command line" or "default"
    int line = 0;
};

class Config {
public:
    /// Parses `key = value` lines; '#' starts a comment. Throws ConfigError
    /// naming file and line on malformed or duplicate keys.
    static Config from_file(const std::filesystem::path& path);
    static Config from_text(const std::string& text, const std::string& origin);

    /// Command-line values replace file values.
    void set(const std::string& key, const std::string& value, ValueSource source);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    /// Rejects keys outside `allowed`, with the offending key's location.
    void require_known(const std::set<std::string>& allowed) const;

    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key, double fallback);
    std::optional<double> get_optional_double(const std::string& key);
    long get_int(const std::string& key, long fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    /// Duration in seconds; accepts s, ms, us, ns suffixes.
    double get_duration(const std::string& key, double fallback);
    std::optional<double> get_optional_duration(const std::string& key);
    /// Angular frequency in rad/s; accepts rad/s, krad/s, Mrad/s, Hz, kHz, MHz.
    double get_frequency(const std::string& key, double fallback);
    std::optional<double> get_optional_frequency(const std::string& key);

    /// Every key read so far with its resolved value, sorted by key.
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

private:
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;
    const std::string* raw(const std::string& key) const;

    std::map<std::string, std::string> values_;
    std::map<std::string, ValueSource> sources_;
    std::map<std::string, std::string> resolved_;
};

/// Parses a real number with an optional trailing "pi" factor ("2pi", "0.01*pi", "pi").
std::optional<double> parse_real(const std::string& text);

/// Formats a double so that it round-trips exactly.
std::string format_double(double v);

}  // namespace kis::cli
