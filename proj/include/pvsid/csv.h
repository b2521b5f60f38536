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

#ifndef PVSID_CSV_H_
#define PVSID_CSV_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "pvsid/common.h"

namespace pvsid {

// 9 significant digits, the precision of every exported CSV.
std::string FormatCsvNumber(double value);

// Writes `# <comment>` when the comment is nonempty.
void WriteCommentLine(std::ostream& os, const std::string& comment);

void WriteCsvRow(std::ostream& os, const std::vector<double>& values);

struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  MatrixXd rows;
};

// Numeric CSV reader: `#` lines are comments, the first other line is the
// header. Throws InvalidArgument on ragged or non-numeric rows.
CsvTable ReadCsv(std::istream& is);

}  // namespace pvsid

#endif  // PVSID_CSV_H_
