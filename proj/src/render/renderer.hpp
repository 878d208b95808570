// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>

#include "camera/camera.hpp"
#include "core/nn.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace tg::render {

// Volumetric rendering of a tri-grid: rays are marched through [near, far],
// tri-grid features are decoded to density and color, and samples are
// alpha-composited over a white background.
//
// Ray directions are kept unnormalized with camera-space z = 1, so the ray
// parameter t IS camera depth and the rendered depth map plugs directly into
// camera unprojection. Segment lengths are rescaled by the direction norm so
// density integrates over world-space arc length.

struct RenderConfig {
  i64 resolution = 32;
  i64 n_samples = 32;
  double near_plane = 1.2;
  double far_plane = 4.2;
  double background = 1.0;  // white, composited via residual transmittance

  void validate() const;
};

struct RenderOutput {
  Tensor image;          // [3, H, W] in [0,1]
  Tensor depth;          // [H, W] camera depth; far where opacity < 0.01
  Tensor opacity;        // [H, W] accumulated weight
  Tensor transmittance;  // [H, W] residual exp(-total optical thickness)
};

// Small MLP decoding aggregated tri-grid features to (density, color).
// Density goes through softplus, color through sigmoid.
struct Decoder {
  nn::Linear hidden;
  nn::Linear head;

  static Decoder make(i64 in_features, Rng& rng);
  // feats [N, F] -> (sigma [N], color [N, 3])
  std::pair<Tensor, Tensor> decode(const Tensor& feats) const;
  void params(nn::NamedTensors& out, const std::string& prefix);
};

// Quadrature shared by every render path: stratum-midpoint depths over
// [near, far] for each pixel-center ray.
struct RayBatch {
  Tensor points;  // [H*W*S, 3] world-space sample positions (constant)
  Tensor deltas;  // [H*W, 1] world arc length of one segment (constant)
  Tensor ts;      // [1, S] camera-depth midpoints (constant)
  i64 n_pixels = 0;
  i64 n_samples = 0;
};

RayBatch make_ray_batch(const cam::CameraPose& pose,
                        const cam::CameraIntrinsics& intr,
                        const RenderConfig& rc);

// Feature lookup on a [3, D, C, H, W] tri-grid tensor: bilinear in each
// plane, linear across its D slices, summed over the three planes. Points
// outside [-1,1]^3 contribute zero. Differentiable w.r.t. the tri-grid.
Tensor sample_features(const Tensor& trigrid, const Tensor& points);

// Alpha compositing core. sigma [P,S] (nonnegative), color [P,S,3] in [0,1],
// ts [1,S] or [P,S], deltas [P,1]. Differentiable w.r.t. sigma and color.
RenderOutput composite(const Tensor& sigma, const Tensor& color,
                       const Tensor& ts, const Tensor& deltas,
                       const RenderConfig& rc);

// Full differentiable path: trigrid [3,D,C,H,W] -> image/depth/opacity.
RenderOutput render(const Tensor& trigrid, const Decoder& decoder,
                    const cam::CameraPose& pose,
                    const cam::CameraIntrinsics& intr, const RenderConfig& rc);

// Analytic-scene path used for synthetic data and oracle tests: the field
// callback supplies density and color at a world position. Not
// differentiable (inputs are constants by construction).
struct FieldSample {
  double sigma = 0.0;
  std::array<double, 3> rgb = {0.0, 0.0, 0.0};
};
using DensityField = std::function<FieldSample(const cam::Vec3&)>;

RenderOutput render_field(const DensityField& field,
                          const cam::CameraPose& pose,
                          const cam::CameraIntrinsics& intr,
                          const RenderConfig& rc);

}  // namespace tg::render
