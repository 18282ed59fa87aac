#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace atomdiode {

// INI-style configuration: [section] headers and key = value pairs, full-line
// comments starting with '#' or ';'. Key order and value spellings are
// preserved, so parse -> serialize -> parse is the identity.
class Config {
  public:
    struct Error : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    static Config parse_string(const std::string& text);
    static Config parse_file(const std::string& path);

    std::string serialize() const;
    uint64_t hash() const;  // FNV-1a of the canonical serialization

    bool has(const std::string& section, const std::string& key) const;
    const std::string& get(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;

    double number(const std::string& section, const std::string& key) const;
    double number(const std::string& section, const std::string& key, double fallback) const;
    long integer(const std::string& section, const std::string& key) const;
    long integer(const std::string& section, const std::string& key, long fallback) const;
    // Comma-separated list of numbers.
    std::vector<double> number_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

  private:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };
    std::vector<Section> sections_;

    const std::string* find(const std::string& section, const std::string& key) const;
};

}  // namespace atomdiode
