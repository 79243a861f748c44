#include "config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace kis::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string where(const ValueSource& src) {
    if (src.line > 0) return src.origin + ":" + std::to_string(src.line);
    return src.origin;
}

struct Unit {
    const char* suffix;
    double factor;
};

std::optional<double> parse_with_units(const std::string& text, const std::vector<Unit>& units) {
    const std::string t = trim(text);
    for (const Unit& u : units) {
        const std::string suf = u.suffix;
        if (t.size() > suf.size() && t.compare(t.size() - suf.size(), suf.size(), suf) == 0) {
            const auto v = parse_real(t.substr(0, t.size() - suf.size()));
            if (v) return *v * u.factor;
            return std::nullopt;
        }
    }
    return parse_real(t);
}

const std::vector<Unit>& duration_units() {
    static const std::vector<Unit> units{
        {"us", 1e-6}, {"\xC2\xB5s", 1e-6}, {"\xCE\xBCs", 1e-6}, {"ms", 1e-3}, {"ns", 1e-9}, {"s", 1.0}};
    return units;
}

const std::vector<Unit>& frequency_units() {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    static const std::vector<Unit> units{{"Mrad/s", 1e6},       {"krad/s", 1e3},       {"rad/s", 1.0},
                                         {"MHz", two_pi * 1e6}, {"kHz", two_pi * 1e3}, {"Hz", two_pi}};
    return units;
}

}  // namespace

std::optional<double> parse_real(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    double factor = 1.0;
    if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
        factor = std::numbers::pi;
        t = trim(t.substr(0, t.size() - 2));
        if (!t.empty() && t.back() == '*') t = trim(t.substr(0, t.size() - 1));
        if (t.empty()) return factor;
        if (t == "-") return -factor;
    }
    const char* begin = t.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v * factor;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Config Config::from_text(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        }
        if (cfg.has(key)) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' (first set at " + where(cfg.sources_.at(key)) + ")");
        }
        cfg.set(key, value, {origin, lineno});
    }
    return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value, ValueSource source) {
    values_[key] = value;
    sources_[key] = std::move(source);
}

void Config::require_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, _] : values_) {
        if (!allowed.count(key)) {
            throw ConfigError(where(sources_.at(key)) + ": unknown key '" + key + "'");
        }
    }
}

void Config::fail(const std::string& key, const std::string& message) const {
    const auto it = sources_.find(key);
    const std::string loc = it == sources_.end() ? std::string("default") : where(it->second);
    throw ConfigError(loc + ": field '" + key + "': " + message);
}

const std::string* Config::raw(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
    const std::string* v = raw(key);
    const std::string out = v ? *v : fallback;
    resolved_[key] = out;
    return out;
}

std::optional<double> Config::get_optional_double(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) return std::nullopt;
    const auto d = parse_real(*v);
    if (!d) fail(key, "not a real number: '" + *v + "'");
    resolved_[key] = format_double(*d);
    return d;
}

double Config::get_double(const std::string& key, double fallback) {
    const auto d = get_optional_double(key);
    if (d) return *d;
    resolved_[key] = format_double(fallback);
    return fallback;
}

long Config::get_int(const std::string& key, long fallback) {
    const std::string* v = raw(key);
    long out = fallback;
    if (v) {
        const auto* first = v->data();
        const auto* last = v->data() + v->size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last) fail(key, "not an integer: '" + *v + "'");
    }
    resolved_[key] = std::to_string(out);
    return out;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) {
    const std::string* v = raw(key);
    std::uint64_t out = fallback;
    if (v) {
        const auto* first = v->data();
        const auto* last = v->data() + v->size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last) fail(key, "not an unsigned integer: '" + *v + "'");
    }
    resolved_[key] = std::to_string(out);
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) {
    const std::string* v = raw(key);
    bool out = fallback;
    if (v) {
        if (*v == "true" || *v == "1" || *v == "yes") out = true;
        else if (*v == "false" || *v == "0" || *v == "no") out = false;
        else fail(key, "not a boolean: '" + *v + "'");
    }
    resolved_[key] = out ? "true" : "false";
    return out;
}

std::optional<double> Config::get_optional_duration(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) return std::nullopt;
    const auto d = parse_with_units(*v, duration_units());
    if (!d) fail(key, "not a duration: '" + *v + "'");
    resolved_[key] = format_double(*d);
    return d;
}

double Config::get_duration(const std::string& key, double fallback) {
    const auto d = get_optional_duration(key);
    if (d) return *d;
    resolved_[key] = format_double(fallback);
    return fallback;
}

std::optional<double> Config::get_optional_frequency(const std::string& key) {
    const std::string* v = raw(key);
    if (!v) return std::nullopt;
    const auto d = parse_with_units(*v, frequency_units());
    if (!d) fail(key, "not a frequency: '" + *v + "'");
    resolved_[key] = format_double(*d);
    return d;
}

double Config::get_frequency(const std::string& key, double fallback) {
    const auto d = get_optional_frequency(key);
    if (d) return *d;
    resolved_[key] = format_double(fallback);
    return fallback;
}

}  // namespace kis::cli
