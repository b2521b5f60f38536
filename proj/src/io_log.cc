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

#include "pvsid/io_log.h"

#include <istream>
#include <ostream>
#include <vector>

#include "pvsid/csv.h"

namespace pvsid {

void IoLog::Validate() const {
  if (u.rows() != y.rows() || u.rows() != w.rows()) {
    throw InvalidArgument("IoLog: u/y/w row counts differ");
  }
}

IoLog IoLog::Slice(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > size()) {
    throw InvalidArgument("IoLog::Slice: range outside log");
  }
  IoLog out;
  out.period = period;
  out.u = u.middleRows(begin, count);
  out.y = y.middleRows(begin, count);
  out.w = w.middleRows(begin, count);
  return out;
}

void WriteIoLogCsv(std::ostream& os, const IoLog& log, const std::string& comment) {
  log.Validate();
  WriteCommentLine(os, comment);
  os << 't';
  for (Index j = 0; j < log.n_u(); ++j) os << ",u" << j + 1;
  for (Index j = 0; j < log.n_y(); ++j) os << ",y" << j + 1;
  for (Index j = 0; j < log.n_w(); ++j) os << ",w" << j + 1;
  os << '\n';
  std::vector<double> row;
  for (Index t = 0; t < log.size(); ++t) {
    row.clear();
    row.push_back(static_cast<double>(t) * log.period);
    for (Index j = 0; j < log.n_u(); ++j) row.push_back(log.u(t, j));
    for (Index j = 0; j < log.n_y(); ++j) row.push_back(log.y(t, j));
    for (Index j = 0; j < log.n_w(); ++j) row.push_back(log.w(t, j));
    WriteCsvRow(os, row);
  }
}

IoLog ReadIoLogCsv(std::istream& is) {
  CsvTable table = ReadCsv(is);
  if (table.header.empty() || table.header[0] != "t") {
    throw InvalidArgument("io log csv: first column must be 't'");
  }
  Index n[3] = {0, 0, 0};
  const char prefixes[3] = {'u', 'y', 'w'};
  int group = 0;
  for (size_t j = 1; j < table.header.size(); ++j) {
    const std::string& name = table.header[j];
    while (group < 3 && (name.empty() || name[0] != prefixes[group])) ++group;
    if (group == 3 || name != std::string(1, prefixes[group]) + std::to_string(n[group] + 1)) {
      throw InvalidArgument("io log csv: unexpected column '" + name + "'");
    }
    ++n[group];
  }
  IoLog log;
  const Index rows = table.rows.rows();
  if (rows >= 2) log.period = table.rows(1, 0) - table.rows(0, 0);
  log.u = table.rows.middleCols(1, n[0]);
  log.y = table.rows.middleCols(1 + n[0], n[1]);
  log.w = table.rows.middleCols(1 + n[0] + n[1], n[2]);
  return log;
}

}  // namespace pvsid
