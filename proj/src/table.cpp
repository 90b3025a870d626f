#include "fluidq/table.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace fluidq {

std::string format_full(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void ResultTable::add_row(std::vector<Cell> cells) {
  if (cells.size() != columns.size())
    throw std::invalid_argument("result table: row width does not match the header");
  rows.push_back(std::move(cells));
}

namespace {

void append_cell(std::string& out, const ResultTable::Cell& cell) {
  if (const double* d = std::get_if<double>(&cell)) {
    out += format_full(*d);
  } else if (const long long* i = std::get_if<long long>(&cell)) {
    out += std::to_string(*i);
  } else {
    const std::string& s = std::get<std::string>(cell);
    const bool quote = s.find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      out += s;
    } else {
      out += '"';
      for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    }
  }
}

}  // namespace

std::string ResultTable::to_csv() const {
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_cell(out, row[i]);
    }
    out += '\n';
  }
  for (const auto& line : footers) {
    out += "# ";
    out += line;
    out += '\n';
  }
  return out;
}

void ResultTable::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!f) throw std::runtime_error("result table: cannot open " + path);
  f << to_csv();
}

}  // namespace fluidq
