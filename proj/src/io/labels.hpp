// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace tg::io {

// Dataset label file: a JSON object mapping image filename to its flattened
// 25-number pose record (16 extrinsic + 9 intrinsic, row-major). JSON doubles
// are emitted with shortest round-trip formatting, so values survive
// write/read bit-exactly.
using LabelEntry = std::pair<std::string, std::array<double, 25>>;

void write_labels(const std::string& path,
                  const std::vector<LabelEntry>& entries);
std::vector<LabelEntry> read_labels(const std::string& path);

}  // namespace tg::io
