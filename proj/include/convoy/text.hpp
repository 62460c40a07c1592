#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace convoy {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double v);

/// Minimal CSV table with rows of pre-formatted cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string str() const;
  void write(const std::string& path) const;
};

std::string trim(std::string_view s);

}  // namespace convoy
