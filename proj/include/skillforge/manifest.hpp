#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace skillforge {

inline constexpr const char* kSourceVersion = "skillforge 0.1.0";

/// Self-description of a run directory, written atomically before the run
/// starts and never modified. Together with the verbatim config snapshot and
/// the metrics file it makes the directory reproducible.
struct RunManifest {
    std::string name;  // arm label used by the plot tool
    std::string kind;  // discover | discover-uniform | discover-diayn | transfer | flat-sac
    std::uint64_t seed = 0;
    std::uint64_t config_fingerprint = 0;
    std::string source_version = kSourceVersion;
    std::string created_utc;
    int workers = 1;

    /// Writes manifest.json (atomic: temp file + rename) and config.snapshot.
    void write(const std::filesystem::path& out_dir, const std::string& config_text) const;
    static RunManifest load(const std::filesystem::path& out_dir);
    /// Marks the run as finished by writing a `completed` file with the end
    /// timestamp; the manifest itself stays immutable.
    static void mark_completed(const std::filesystem::path& out_dir);
};

}  // namespace skillforge
