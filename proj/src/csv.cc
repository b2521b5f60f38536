// Copyright 2026 The PVSID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pvsid/csv.h"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pvsid {

std::string ToHex(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

std::string FormatCsvNumber(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

void WriteCommentLine(std::ostream& os, const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
}

void WriteCsvRow(std::ostream& os, const std::vector<double>& values) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << FormatCsvNumber(values[i]);
  }
  os << '\n';
}

namespace {

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

CsvTable ReadCsv(std::istream& is) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_number = 0;
  while (std::getline(is, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      size_t start = line.find_first_not_of(" ", 1);
      table.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    std::vector<std::string> fields = SplitComma(line);
    if (table.header.empty()) {
      table.header = fields;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InvalidArgument("csv line " + std::to_string(line_number) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) {
      size_t used = 0;
      double v = 0;
      try {
        v = std::stod(f, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != f.size()) {
        throw InvalidArgument("csv line " + std::to_string(line_number) +
                              ": not a number '" + f + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw InvalidArgument("csv: missing header");
  table.rows.resize(static_cast<Index>(rows.size()),
                    static_cast<Index>(table.header.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      table.rows(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

}  // namespace pvsid
