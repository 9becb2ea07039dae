#include "skillforge/config.hpp"

#include <fstream>
#include <sstream>

#include "skillforge/rng.hpp"

namespace skillforge {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_string(buf.str(), path.string());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.raw_text_ = text;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            cfg.sections_[section];
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        auto [it, inserted] = cfg.sections_[section].emplace(key, value);
        if (!inserted)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + section +
                              "." + key + "'");
    }
    return cfg;
}

std::uint64_t KeyValueConfig::fingerprint() const {
    return fnv1a64(raw_text_);
}

const std::string* KeyValueConfig::find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    consumed_.insert(section + "." + key);
    return &k->second;
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

void KeyValueConfig::missing(const std::string& section, const std::string& key) const {
    throw ConfigError(origin_ + ": missing required key '" + key + "' in section [" + section + "]");
}

std::string KeyValueConfig::get_string(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) missing(section, key);
    return *v;
}

std::string KeyValueConfig::get_string_or(const std::string& section, const std::string& key,
                                          const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key) const {
    const std::string s = get_string(section, key);
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + section + "." + key + "': not a number: '" + s + "'");
    }
}

double KeyValueConfig::get_double_or(const std::string& section, const std::string& key,
                                     double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long KeyValueConfig::get_long(const std::string& section, const std::string& key) const {
    const std::string s = get_string(section, key);
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key '" + section + "." + key + "': not an integer: '" + s + "'");
    }
}

long KeyValueConfig::get_long_or(const std::string& section, const std::string& key,
                                 long fallback) const {
    return has(section, key) ? get_long(section, key) : fallback;
}

bool KeyValueConfig::get_bool_or(const std::string& section, const std::string& key,
                                 bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string s = get_string(section, key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(origin_ + ": key '" + section + "." + key + "': not a boolean: '" + s + "'");
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& section,
                                                    const std::string& key) const {
    std::string s = get_string(section, key);
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + section + "." + key + "': bad list element '" +
                              tok + "'");
        }
    }
    return out;
}

void KeyValueConfig::ensure_all_consumed() const {
    std::vector<std::string> unknown;
    for (const auto& [section, kv] : sections_)
        for (const auto& [key, value] : kv)
            if (consumed_.count(section + "." + key) == 0) unknown.push_back(section + "." + key);
    if (!unknown.empty()) {
        std::string msg = origin_ + ": unknown config key(s):";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
}

}  // namespace skillforge
