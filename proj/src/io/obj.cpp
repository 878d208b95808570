// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "io/obj.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tg::io {

void write_obj(const std::string& path, const Mesh& mesh) {
  if (!mesh.valid_indices())
    throw std::invalid_argument("write_obj: face references missing vertex");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_obj: cannot open " + path);
  out << "# " << mesh.vertices.size() << " vertices, " << mesh.faces.size()
      << " faces\n";
  char line[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v[0], v[1], v[2]);
    out << line;
  }
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  if (!out) throw std::runtime_error("write_obj: write failed for " + path);
}

}  // namespace tg::io
