#include "convoy/text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "convoy/error.hpp"

namespace convoy {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size())
    fail(ErrorCode::Shape, "csv row has " + std::to_string(row.size()) + " cells, header has " +
                               std::to_string(header.size()));
  rows.push_back(std::move(row));
}

static void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

std::string CsvTable::str() const {
  std::string out;
  append_line(out, header);
  for (const auto& r : rows) append_line(out, r);
  return out;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot open " + path + " for writing");
  const std::string s = str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f) fail(ErrorCode::Io, "write failed: " + path);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace convoy
