#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "skillforge/common.hpp"

namespace skillforge {

/// Flat key-value configuration with [section] headers, one `key = value`
/// per line, and `#`/`;` comment lines. Reads track which keys were
/// consumed; ensure_all_consumed() turns leftover keys into hard errors so a
/// typo in a sweep never passes silently.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::filesystem::path& path);
    static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

    /// Byte-for-byte text of the source, for verbatim snapshots.
    const std::string& raw_text() const { return raw_text_; }
    std::uint64_t fingerprint() const;

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key) const;
    long get_long_or(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

    void ensure_all_consumed() const;

private:
    std::string raw_text_;
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> consumed_;

    const std::string* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void missing(const std::string& section, const std::string& key) const;
};

}  // namespace skillforge
