// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "occlusion/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/ops.hpp"

namespace tg::occl {

namespace {

// Shared frustum-and-depth test. depth_at answers the reference depth for a
// normalized image point; a voxel center passes when it projects inside the
// image and lies no deeper than that reference plus eps.
template <typename DepthAt>
VisibilityVolume sweep_volume(const cam::CameraPose& pose,
                              const cam::CameraIntrinsics& intr, i64 v,
                              DepthAt&& depth_at) {
  if (v <= 0) throw std::invalid_argument("visibility volume: v must be > 0");
  pose.validate();
  intr.validate();

  VisibilityVolume vol;
  vol.v = v;
  vol.grid.assign(static_cast<size_t>(v * v * v), 0);
  const double eps = vol.eps_vis();

  for (i64 ix = 0; ix < v; ++ix) {
    for (i64 iy = 0; iy < v; ++iy) {
      for (i64 iz = 0; iz < v; ++iz) {
        cam::Vec3 p = {VisibilityVolume::center(ix, v),
                       VisibilityVolume::center(iy, v),
                       VisibilityVolume::center(iz, v)};
        auto proj = cam::try_project(p, pose, intr);
        if (!proj) continue;
        if (proj->u < 0.0 || proj->u > 1.0 || proj->v < 0.0 || proj->v > 1.0)
          continue;
        if (proj->depth <= depth_at(proj->u, proj->v) + eps)
          vol.at(ix, iy, iz) = 1;
      }
    }
  }
  return vol;
}

}  // namespace

VisibilityVolume visibility_volume(const Tensor& depth,
                                   const cam::CameraPose& pose,
                                   const cam::CameraIntrinsics& intr, i64 v) {
  if (depth.ndim() != 2)
    throw std::invalid_argument("visibility_volume: depth must be [H,W]");
  const i64 h = depth.shape()[0];
  const i64 w = depth.shape()[1];
  const double* d = depth.data();

  // nearest-pixel depth lookup
  auto depth_at = [&](double u, double vv) {
    i64 iu = std::clamp<i64>(static_cast<i64>(std::floor(u * double(w))), 0,
                             w - 1);
    i64 iv = std::clamp<i64>(static_cast<i64>(std::floor(vv * double(h))), 0,
                             h - 1);
    return d[iv * w + iu];
  };
  return sweep_volume(pose, intr, v, depth_at);
}

VisibilityVolume oracle_raycast(const SurfaceDepthFn& surface,
                                const cam::CameraPose& pose,
                                const cam::CameraIntrinsics& intr, i64 v) {
  return sweep_volume(pose, intr, v,
                      [&](double u, double vv) { return surface(u, vv); });
}

Tensor to_trigrid_mask(const VisibilityVolume& vol, i64 d, i64 r) {
  if (vol.v <= 0 || d <= 0 || r <= 0)
    throw std::invalid_argument("to_trigrid_mask: bad dimensions");
  const i64 v = vol.v;

  // Half-open index range of cells whose boxes a voxel box [i, i+1)/v
  // overlaps, on a grid of n cells over the same [-1,1] span. Exact when
  // v == n (one-to-one binning).
  auto bin_lo = [&](i64 i, i64 n) {
    return std::clamp<i64>(
        static_cast<i64>(std::floor(double(i) * double(n) / double(v))), 0,
        n - 1);
  };
  auto bin_hi = [&](i64 i, i64 n) {  // inclusive
    return std::clamp<i64>(
        static_cast<i64>(std::ceil(double(i + 1) * double(n) / double(v))) - 1,
        0, n - 1);
  };

  Tensor mask = Tensor::zeros({3, d, r, r});
  double* m = mask.data();
  auto set_cell = [&](i64 pl, i64 k, i64 row, i64 col) {
    m[((pl * d + k) * r + row) * r + col] = 1.0;
  };

  for (i64 ix = 0; ix < v; ++ix) {
    for (i64 iy = 0; iy < v; ++iy) {
      for (i64 iz = 0; iz < v; ++iz) {
        if (!vol.at(ix, iy, iz)) continue;
        // plane 0: rows y, cols x, slices bin z
        // plane 1: rows z, cols x, slices bin y
        // plane 2: rows y, cols z, slices bin x
        for (i64 k = bin_lo(iz, d); k <= bin_hi(iz, d); ++k)
          for (i64 row = bin_lo(iy, r); row <= bin_hi(iy, r); ++row)
            for (i64 col = bin_lo(ix, r); col <= bin_hi(ix, r); ++col)
              set_cell(0, k, row, col);
        for (i64 k = bin_lo(iy, d); k <= bin_hi(iy, d); ++k)
          for (i64 row = bin_lo(iz, r); row <= bin_hi(iz, r); ++row)
            for (i64 col = bin_lo(ix, r); col <= bin_hi(ix, r); ++col)
              set_cell(1, k, row, col);
        for (i64 k = bin_lo(ix, d); k <= bin_hi(ix, d); ++k)
          for (i64 row = bin_lo(iy, r); row <= bin_hi(iy, r); ++row)
            for (i64 col = bin_lo(iz, r); col <= bin_hi(iz, r); ++col)
              set_cell(2, k, row, col);
      }
    }
  }

  // dilate by one cell within each slice map
  Tensor out = Tensor::zeros({3, d, r, r});
  double* o = out.data();
  for (i64 pl = 0; pl < 3; ++pl) {
    for (i64 k = 0; k < d; ++k) {
      const double* src = m + (pl * d + k) * r * r;
      double* dst = o + (pl * d + k) * r * r;
      for (i64 row = 0; row < r; ++row) {
        for (i64 col = 0; col < r; ++col) {
          double any = 0.0;
          for (i64 dr = std::max<i64>(0, row - 1);
               dr <= std::min<i64>(r - 1, row + 1) && any == 0.0; ++dr)
            for (i64 dc = std::max<i64>(0, col - 1);
                 dc <= std::min<i64>(r - 1, col + 1); ++dc)
              if (src[dr * r + dc] != 0.0) {
                any = 1.0;
                break;
              }
          dst[row * r + col] = any;
        }
      }
    }
  }
  return out;
}

Tensor occlusion_of(const Tensor& mask) {
  for (i64 i = 0; i < mask.numel(); ++i) {
    double x = mask.data()[i];
    if (x != 0.0 && x != 1.0)
      throw std::invalid_argument("occlusion_of: mask must be binary");
  }
  return ops::add_scalar(ops::neg(mask), 1.0);
}

Tensor apply_mask(const Tensor& trigrid, const Tensor& mask) {
  if (trigrid.ndim() != 5)
    throw std::invalid_argument("apply_mask: trigrid must be [3,D,C,H,W]");
  if (mask.ndim() != 4)
    throw std::invalid_argument("apply_mask: mask must be [3,D,H,W]");
  const auto& ts = trigrid.shape();
  const auto& ms = mask.shape();
  if (ms[0] != ts[0] || ms[1] != ts[1] || ms[2] != ts[3] || ms[3] != ts[4])
    throw std::invalid_argument("apply_mask: mask does not match trigrid");
  Tensor m = ops::reshape(mask, {ms[0], ms[1], 1, ms[2], ms[3]});
  return ops::mul(trigrid, m);
}

}  // namespace tg::occl
