// SPDX-License-Identifier: Apache-2.0
//
// Deterministic CSV emission.  Numbers are printed with %.17g so a rerun
// with the same seed is byte-identical; empty cells stay empty strings.

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mimose {

std::string format_number(double value);
std::string format_cell(const std::optional<double>& value);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace mimose
