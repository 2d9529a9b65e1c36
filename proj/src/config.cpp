#include "vpme/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vpme {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

double to_double(const std::string& sec, const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno != 0)
        throw ConfigError("[" + sec + "] " + key + ": expected a number, got '" + v + "'");
    return x;
}

long long to_integer(const std::string& sec, const std::string& key, const std::string& v) {
    double x = to_double(sec, key, v);
    if (x != static_cast<double>(static_cast<long long>(x)))
        throw ConfigError("[" + sec + "] " + key + ": expected an integer, got '" + v + "'");
    return static_cast<long long>(x);
}

std::vector<std::string> split_list(const std::string& sec, const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw ConfigError("[" + sec + "] " + key + ": expected a list [a, b, ...]");
    std::vector<std::string> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

ConfigSection::ConfigSection(std::string name, std::map<std::string, std::string> values)
    : name_(std::move(name)), values_(std::move(values)) {}

const std::string* ConfigSection::raw(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

int ConfigSection::get_int(const std::string& key, int def) {
    const std::string* v = raw(key);
    return v ? static_cast<int>(to_integer(name_, key, *v)) : def;
}

uint64_t ConfigSection::get_u64(const std::string& key, uint64_t def) {
    const std::string* v = raw(key);
    if (!v) return def;
    errno = 0;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v->c_str(), &end, 10);
    if (v->empty() || *end != '\0' || errno != 0 || (*v)[0] == '-')
        throw ConfigError("[" + name_ + "] " + key + ": expected an unsigned integer, got '" + *v + "'");
    return x;
}

double ConfigSection::get_double(const std::string& key, double def) {
    const std::string* v = raw(key);
    return v ? to_double(name_, key, *v) : def;
}

bool ConfigSection::get_bool(const std::string& key, bool def) {
    const std::string* v = raw(key);
    if (!v) return def;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected true or false, got '" + *v + "'");
}

std::string ConfigSection::get_string(const std::string& key, const std::string& def) {
    const std::string* v = raw(key);
    if (!v) return def;
    if (v->size() >= 2 && v->front() == '"' && v->back() == '"') return v->substr(1, v->size() - 2);
    throw ConfigError("[" + name_ + "] " + key + ": expected a quoted string");
}

std::vector<double> ConfigSection::get_doubles(const std::string& key, const std::vector<double>& def) {
    const std::string* v = raw(key);
    if (!v) return def;
    std::vector<double> out;
    for (const std::string& s : split_list(name_, key, *v)) out.push_back(to_double(name_, key, s));
    return out;
}

std::vector<std::size_t> ConfigSection::get_sizes(const std::string& key, const std::vector<std::size_t>& def) {
    const std::string* v = raw(key);
    if (!v) return def;
    std::vector<std::size_t> out;
    for (const std::string& s : split_list(name_, key, *v)) {
        long long x = to_integer(name_, key, s);
        if (x < 1) throw ConfigError("[" + name_ + "] " + key + ": entries must be positive");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

void ConfigSection::finish() const {
    for (const auto& kv : values_)
        if (!used_.count(kv.first)) throw ConfigError("[" + name_ + "] unknown key '" + kv.first + "'");
}

ConfigFile ConfigFile::parse(const std::string& text, const std::set<std::string>& allowed) {
    ConfigFile f;
    std::stringstream ss(text);
    std::string line, current;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
            current = trim(line.substr(1, line.size() - 2));
            if (!allowed.count(current)) throw ConfigError("unknown section [" + current + "]");
            if (f.sections_.count(current)) throw ConfigError("duplicate section [" + current + "]");
            f.sections_[current];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (current.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside a section");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        auto& sec = f.sections_[current];
        if (sec.count(key)) throw ConfigError("[" + current + "] duplicate key '" + key + "'");
        sec[key] = value;
    }
    return f;
}

ConfigFile ConfigFile::load(const std::string& path, const std::set<std::string>& allowed) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), allowed);
}

ConfigSection ConfigFile::section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) return ConfigSection(name, {});
    return ConfigSection(name, it->second);
}

}  // namespace vpme
