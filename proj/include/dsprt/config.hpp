// config.hpp -- declarative `key = value` run configuration files.
// Unknown keys are errors; every key must be consumed by the reader.
#pragma once
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsprt {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigMap {
public:
    static ConfigMap parse_file(const std::string& path);
    static ConfigMap parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& def);
    double get_double(const std::string& key);
    double get_double(const std::string& key, double def);
    long get_long(const std::string& key, long def);
    std::uint64_t get_u64(const std::string& key, std::uint64_t def);
    int get_int(const std::string& key, int def);
    std::vector<double> get_doubles(const std::string& key);               // comma separated
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def);
    std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& def);

    // Throws ConfigError if any key was never consumed.
    void check_all_consumed() const;

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;

    const std::string* lookup(const std::string& key);
};

}  // namespace dsprt
