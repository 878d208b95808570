// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "core/tensor.hpp"
#include "io/obj.hpp"

namespace tg::dual {

// Marching cubes over a cubic scalar lattice. values holds res^3 samples
// indexed [x][y][z] (x-major), taken at positions
//   coord(i) = origin + spacing * i
// per axis. Triangles approximate the iso-surface value == iso. Vertices on
// shared cell edges are emitted once, so the mesh is watertight wherever
// the surface does not hit the lattice boundary. An empty iso-surface
// yields an empty mesh.
io::Mesh marching_cubes(const std::vector<double>& values, i64 res,
                        double iso, double origin, double spacing);

}  // namespace tg::dual
