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

#ifndef PVSID_MODEL_IO_H_
#define PVSID_MODEL_IO_H_

#include <string>

#include "pvsid/pvsid.h"

namespace pvsid {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON model file (layout documented in docs/model_format.md).
// Doubles are written in shortest round-trip form, so save -> load -> save is
// byte-identical and loaded models predict bit-exactly like the original.
std::string SerializeModel(const PvsidModel& model);

// Throws InvalidArgument on malformed or truncated text, a version mismatch,
// a checksum mismatch, or inconsistent shapes. Never returns a partial model.
PvsidModel DeserializeModel(const std::string& text);

void SaveModel(const std::string& path, const PvsidModel& model);
PvsidModel LoadModel(const std::string& path);

}  // namespace pvsid

#endif  // PVSID_MODEL_IO_H_
