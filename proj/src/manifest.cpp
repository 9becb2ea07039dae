#include "skillforge/manifest.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "skillforge/common.hpp"

namespace skillforge {

namespace {

std::string now_utc() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
        if (!os) throw IoError("cannot write: " + tmp.string());
        os << content;
        os.flush();
        if (!os) throw IoError("write failure: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void RunManifest::write(const std::filesystem::path& out_dir, const std::string& config_text) const {
    std::filesystem::create_directories(out_dir);
    nlohmann::json j;
    j["name"] = name;
    j["kind"] = kind;
    j["seed"] = seed;
    j["config_fingerprint"] = config_fingerprint;
    j["source_version"] = source_version;
    j["created_utc"] = created_utc.empty() ? now_utc() : created_utc;
    j["workers"] = workers;
    write_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
    write_atomic(out_dir / "config.snapshot", config_text);
}

RunManifest RunManifest::load(const std::filesystem::path& out_dir) {
    std::ifstream is(out_dir / "manifest.json");
    if (!is) throw IoError("cannot read manifest: " + (out_dir / "manifest.json").string());
    nlohmann::json j = nlohmann::json::parse(is);
    RunManifest m;
    m.name = j.at("name").get<std::string>();
    m.kind = j.at("kind").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_fingerprint = j.at("config_fingerprint").get<std::uint64_t>();
    m.source_version = j.at("source_version").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.workers = j.at("workers").get<int>();
    return m;
}

void RunManifest::mark_completed(const std::filesystem::path& out_dir) {
    write_atomic(out_dir / "completed", now_utc() + "\n");
}

}  // namespace skillforge
