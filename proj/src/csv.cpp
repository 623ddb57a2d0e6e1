// SPDX-License-Identifier: Apache-2.0

#include "mimose/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mimose {

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_cell(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string();
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("csv: row width does not match header");
  rows_.push_back(cells);
}

std::string CsvWriter::str() const {
  std::string out;
  auto append_line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append_line(header_);
  for (const auto& row : rows_) append_line(row);
  return out;
}

void CsvWriter::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot open output file: " + path);
  out << str();
}

}  // namespace mimose
