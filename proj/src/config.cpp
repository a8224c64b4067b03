#include "kerodeepc/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace kerodeepc::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& tok, double& out) {
    const std::string t = trim(tok);
    if (t == "inf" || t == "+inf") {
        out = std::numeric_limits<double>::infinity();
        return true;
    }
    if (t == "-inf") {
        out = -std::numeric_limits<double>::infinity();
        return true;
    }
    const char* b = t.data();
    const char* e = t.data() + t.size();
    if (b != e && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return !t.empty() && ec == std::errc() && ptr == e;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    return out;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& source) {
    KeyValueFile f;
    f.source_ = source;
    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) +
                              ": expected 'section.key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (const auto hash = value.find(" #"); hash != std::string::npos) {
            value = trim(value.substr(0, hash));
        }
        const auto dot = key.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": key '" + key +
                              "' must have the form section.key");
        }
        if (f.entries_.count(key)) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' (first set on line " + std::to_string(f.entries_[key].line) + ")");
        }
        f.entries_[key] = Entry{value, lineno};
    }
    return f;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse(buf.str(), path.string());
}

std::string KeyValueFile::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, e] : entries_) {
        mix(k);
        mix("=");
        mix(e.value);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void KeyValueFile::reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [k, e] : entries_) {
        if (!known.count(k)) {
            throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
        }
    }
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
    entries_[key] = Entry{value, 0};
}

std::string KeyValueFile::where(const std::string& key) const {
    const auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    return source_ + ":" + std::to_string(line) + ": ";
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
}

double KeyValueFile::get_real(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    double v = 0.0;
    if (!parse_double(it->second.value, v)) {
        throw ConfigError(where(key) + "'" + key + "' expects a real number, got '" +
                          it->second.value + "'");
    }
    return v;
}

Index KeyValueFile::get_count(const std::string& key, Index fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    double v = 0.0;
    if (!parse_double(it->second.value, v) || v < 0 || v != std::floor(v) || !std::isfinite(v)) {
        throw ConfigError(where(key) + "'" + key + "' expects a non-negative integer, got '" +
                          it->second.value + "'");
    }
    return static_cast<Index>(v);
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const auto& v = it->second.value;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where(key) + "'" + key + "' expects true or false, got '" + v + "'");
}

Vector KeyValueFile::get_vector(const std::string& key, const Vector& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const auto toks = split_list(it->second.value);
    Vector out(static_cast<Index>(toks.size()));
    for (size_t i = 0; i < toks.size(); ++i) {
        if (!parse_double(toks[i], out(static_cast<Index>(i)))) {
            throw ConfigError(where(key) + "'" + key + "' entry " + std::to_string(i + 1) +
                              " is not a real number: '" + toks[i] + "'");
        }
    }
    return out;
}

std::vector<Index> KeyValueFile::get_counts(const std::string& key,
                                            const std::vector<Index>& fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const Vector v = get_vector(key, Vector());
    std::vector<Index> out;
    for (Index i = 0; i < v.size(); ++i) {
        if (v(i) < 0 || v(i) != std::floor(v(i))) {
            throw ConfigError(where(key) + "'" + key + "' expects non-negative integers");
        }
        out.push_back(static_cast<Index>(v(i)));
    }
    return out;
}

}  // namespace kerodeepc::config
