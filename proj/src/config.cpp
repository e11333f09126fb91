#include "dsprt/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dsprt {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text, const std::string& origin) {
    ConfigMap cfg;
    cfg.origin_ = origin;
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
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected `key = value`, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key `" +
                              key + "`");
        cfg.values_[key] = val;
    }
    return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

const std::string* ConfigMap::lookup(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
}

std::string ConfigMap::get_string(const std::string& key) {
    const auto* v = lookup(key);
    if (!v) throw ConfigError(origin_ + ": missing required key `" + key + "`");
    return *v;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& def) {
    const auto* v = lookup(key);
    return v ? *v : def;
}

double ConfigMap::get_double(const std::string& key) {
    const std::string s = get_string(key);
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key `" + key + "`: not a number: " + s);
    return x;
}

double ConfigMap::get_double(const std::string& key, double def) {
    return has(key) ? get_double(key) : def;
}

long ConfigMap::get_long(const std::string& key, long def) {
    if (!has(key)) return def;
    const std::string s = get_string(key);
    char* end = nullptr;
    const long x = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key `" + key + "`: not an integer: " + s);
    return x;
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const std::string s = get_string(key);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError(origin_ + ": key `" + key + "`: not an unsigned integer: " + s);
    return static_cast<std::uint64_t>(x);
}

int ConfigMap::get_int(const std::string& key, int def) {
    return static_cast<int>(get_long(key, def));
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) {
    const std::string s = get_string(key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty())
            throw ConfigError(origin_ + ": key `" + key + "`: empty list element");
        char* end = nullptr;
        const double x = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw ConfigError(origin_ + ": key `" + key + "`: not a number: " + tok);
        out.push_back(x);
    }
    if (out.empty()) throw ConfigError(origin_ + ": key `" + key + "`: empty list");
    return out;
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           const std::vector<double>& def) {
    return has(key) ? get_doubles(key) : def;
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key,
                                                const std::vector<std::string>& def) {
    if (!has(key)) return def;
    const std::string s = get_string(key);
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty())
            throw ConfigError(origin_ + ": key `" + key + "`: empty list element");
        out.push_back(tok);
    }
    if (out.empty()) throw ConfigError(origin_ + ": key `" + key + "`: empty list");
    return out;
}

void ConfigMap::check_all_consumed() const {
    std::string unknown;
    for (const auto& [k, v] : values_) {
        if (!consumed_.count(k)) {
            if (!unknown.empty()) unknown += ", ";
            unknown += k;
        }
    }
    if (!unknown.empty())
        throw ConfigError(origin_ + ": unknown key(s): " + unknown);
}

}  // namespace dsprt
