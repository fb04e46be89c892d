#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace handkin {

// Numeric CSV with a single header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

// Shortest representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

}  // namespace handkin
