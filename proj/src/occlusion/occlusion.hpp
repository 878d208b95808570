// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "camera/camera.hpp"
#include "core/tensor.hpp"

namespace tg::occl {

// Visibility of the scene cube from one camera: a voxel is visible when its
// center projects into the image and sits no deeper than the depth map
// (plus a discretization tolerance) along that pixel's ray.
struct VisibilityVolume {
  i64 v = 0;
  std::vector<uint8_t> grid;  // [x][y][z], 1 = visible

  uint8_t at(i64 ix, i64 iy, i64 iz) const {
    return grid[static_cast<size_t>((ix * v + iy) * v + iz)];
  }
  uint8_t& at(i64 ix, i64 iy, i64 iz) {
    return grid[static_cast<size_t>((ix * v + iy) * v + iz)];
  }
  // voxel-center world coordinate along one axis
  static double center(i64 i, i64 v) {
    return (2.0 * double(i) + 1.0) / double(v) - 1.0;
  }
  double eps_vis() const { return 3.0 * std::sqrt(3.0) / double(v); }
};

// depth: [H, W] camera-depth map from the input view.
VisibilityVolume visibility_volume(const Tensor& depth,
                                   const cam::CameraPose& pose,
                                   const cam::CameraIntrinsics& intr, i64 v);

// Test oracle: same visibility question answered against an exact per-ray
// surface depth function instead of a sampled depth map.
using SurfaceDepthFn = std::function<double(double u, double v)>;
VisibilityVolume oracle_raycast(const SurfaceDepthFn& surface,
                                const cam::CameraPose& pose,
                                const cam::CameraIntrinsics& intr, i64 v);

// Projects the visibility volume onto tri-grid cells: a cell is visible
// when at least one visible voxel's box overlaps the world-space box the
// cell represents (its in-plane footprint times its slice's span of the
// third axis). The result is dilated by one cell within each slice map.
// Returns a binary [3, D, R, R] visible-mask.
Tensor to_trigrid_mask(const VisibilityVolume& vol, i64 d, i64 r);

// Cellwise complement of a binary mask.
Tensor occlusion_of(const Tensor& mask);

// Multiplies a [3,D,C,R,R] tri-grid by a [3,D,R,R] mask, broadcasting over
// channels. Differentiable with respect to the tri-grid.
Tensor apply_mask(const Tensor& trigrid, const Tensor& mask);

}  // namespace tg::occl
