#include "atomdiode/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace atomdiode {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw Error("config line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw Error("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw Error("config line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw Error("config line " + std::to_string(lineno) + ": key outside any [section]");
        if (cfg.find(section, key))
            throw Error("config line " + std::to_string(lineno) + ": duplicate key [" + section +
                        "] " + key);
        cfg.set(section, key, value);
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

std::string Config::serialize() const {
    std::ostringstream out;
    for (size_t i = 0; i < sections_.size(); ++i) {
        if (i) out << "\n";
        out << "[" << sections_[i].name << "]\n";
        for (const auto& [k, v] : sections_[i].entries) out << k << " = " << v << "\n";
    }
    return out.str();
}

uint64_t Config::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const char c : serialize()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

const std::string* Config::find(const std::string& section, const std::string& key) const {
    for (const auto& s : sections_)
        if (s.name == section)
            for (const auto& [k, v] : s.entries)
                if (k == key) return &v;
    return nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

const std::string& Config::get(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) throw Error("missing config field [" + section + "] " + key);
    return *v;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
}

namespace {

double parse_number(const std::string& section, const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw Config::Error("config field [" + section + "] " + key + ": not a number: " + v);
    return x;
}

}  // namespace

double Config::number(const std::string& section, const std::string& key) const {
    return parse_number(section, key, get(section, key));
}

double Config::number(const std::string& section, const std::string& key, double fallback) const {
    const std::string* v = find(section, key);
    return v ? parse_number(section, key, *v) : fallback;
}

long Config::integer(const std::string& section, const std::string& key) const {
    const double x = number(section, key);
    const long l = static_cast<long>(x);
    if (static_cast<double>(l) != x)
        throw Error("config field [" + section + "] " + key + ": not an integer");
    return l;
}

long Config::integer(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? integer(section, key) : fallback;
}

std::vector<double> Config::number_list(const std::string& section, const std::string& key) const {
    const std::string& raw = get(section, key);
    std::vector<double> out;
    std::string item;
    std::istringstream ss(raw);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw Error("config field [" + section + "] " + key + ": empty list element");
        out.push_back(parse_number(section, key, item));
    }
    return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    for (auto& s : sections_)
        if (s.name == section) {
            for (auto& [k, v] : s.entries)
                if (k == key) {
                    v = value;
                    return;
                }
            s.entries.emplace_back(key, value);
            return;
        }
    sections_.push_back({section, {{key, value}}});
}

}  // namespace atomdiode
