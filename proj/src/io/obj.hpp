// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

namespace tg::io {

// Triangle mesh with 0-based face indices. Written as ASCII OBJ, where face
// indices become 1-based per the format.
struct Mesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<int, 3>> faces;

  bool valid_indices() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& f : faces)
      for (int idx : f)
        if (idx < 0 || idx >= n) return false;
    return true;
  }
};

void write_obj(const std::string& path, const Mesh& mesh);

}  // namespace tg::io
