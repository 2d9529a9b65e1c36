#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace vpme {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One [section] of a flat key = value file. Getters record the keys they
// read; finish() rejects anything left over.
class ConfigSection {
public:
    ConfigSection() = default;
    ConfigSection(std::string name, std::map<std::string, std::string> values);

    const std::string& name() const { return name_; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    int get_int(const std::string& key, int def);
    uint64_t get_u64(const std::string& key, uint64_t def);
    double get_double(const std::string& key, double def);
    bool get_bool(const std::string& key, bool def);
    std::string get_string(const std::string& key, const std::string& def);
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def);
    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& def);

    void finish() const;

private:
    const std::string* raw(const std::string& key);
    std::string name_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::set<std::string>& allowed_sections);
    static ConfigFile load(const std::string& path, const std::set<std::string>& allowed_sections);

    bool has(const std::string& section) const { return sections_.count(section) != 0; }
    // Empty section when absent.
    ConfigSection section(const std::string& name) const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace vpme
