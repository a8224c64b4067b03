#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kerodeepc/numerics.hpp"

namespace kerodeepc::config {

/// Parsed `section.key = value` file. Lines starting with '#' and blank lines
/// are ignored; lists are comma-separated.
class KeyValueFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    /// Throws ConfigError with "<source>:<line>: ..." on malformed lines or duplicate keys.
    static KeyValueFile parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueFile load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) > 0; }
    [[nodiscard]] const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    /// FNV-1a hash of the normalized key/value pairs, as 16 hex digits.
    [[nodiscard]] std::string hash() const;

    /// Throws ConfigError naming the first key that is not in `known`.
    void reject_unknown(const std::set<std::string>& known) const;

    void set(const std::string& key, const std::string& value);

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_real(const std::string& key, double fallback) const;
    [[nodiscard]] Index get_count(const std::string& key, Index fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] Vector get_vector(const std::string& key, const Vector& fallback) const;
    [[nodiscard]] std::vector<Index> get_counts(const std::string& key,
                                                const std::vector<Index>& fallback) const;

    /// "<source>:<line>: " for error messages.
    [[nodiscard]] std::string where(const std::string& key) const;

private:
    std::map<std::string, Entry> entries_;
    std::string source_;
};

}  // namespace kerodeepc::config
