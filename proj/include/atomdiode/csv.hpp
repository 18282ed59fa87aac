#pragma once

#include <string>
#include <vector>

namespace atomdiode {

// Shortest decimal spelling that round-trips a double (17 significant digits).
std::string format_number(double x);

// Rectangular CSV with '#'-prefixed provenance lines before the header row.
struct ResultTable {
    std::vector<std::string> provenance;  // emitted verbatim after "# "
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::string to_csv() const;
    void write(const std::string& path) const;
};

}  // namespace atomdiode
