#pragma once

#include <string>
#include <variant>
#include <vector>

namespace fluidq {

// Column-ordered results table. CSV output carries full precision (17
// significant digits via to_chars, locale independent) and LF line endings;
// footer lines record provenance and are prefixed with '#'.
struct ResultTable {
  using Cell = std::variant<double, long long, std::string>;

  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> footers;

  void add_row(std::vector<Cell> cells);
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

std::string format_full(double v);  // shortest lossless decimal form

}  // namespace fluidq
