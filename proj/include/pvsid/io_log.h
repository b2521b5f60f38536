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

#ifndef PVSID_IO_LOG_H_
#define PVSID_IO_LOG_H_

#include <iosfwd>
#include <string>

#include "pvsid/common.h"

namespace pvsid {

// Synchronized input/output series. Row t holds the input u_t applied after
// the measurements y_t (cheap sensors) and w_t (expensive sensor) were taken.
struct IoLog {
  double period = 0.02;
  MatrixXd u;  // N x n_u
  MatrixXd y;  // N x n_y
  MatrixXd w;  // N x n_w

  Index size() const { return u.rows(); }
  Index n_u() const { return u.cols(); }
  Index n_y() const { return y.cols(); }
  Index n_w() const { return w.cols(); }

  // Throws InvalidArgument when row counts disagree.
  void Validate() const;
  // Rows [begin, begin + count).
  IoLog Slice(Index begin, Index count) const;
};

// Header `t,u1..,y1..,w1..`, 9 significant digits.
void WriteIoLogCsv(std::ostream& os, const IoLog& log, const std::string& comment = "");
IoLog ReadIoLogCsv(std::istream& is);

}  // namespace pvsid

#endif  // PVSID_IO_LOG_H_
