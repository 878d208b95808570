// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "camera/camera.hpp"
#include "core/tensor.hpp"
#include "dual/marching.hpp"
#include "encoder/encoder.hpp"
#include "generator/generator.hpp"
#include "io/obj.hpp"
#include "render/renderer.hpp"

namespace tg::dual {

// Output of the two-encoder inversion: the first encoder's tri-grid serves
// the cells visible from the input view, the second's the occluded cells,
// combined cell-for-cell into the stitched tri-grid.
struct InversionResult {
  Tensor stitched;       // [3,D,C,H,W]
  Tensor t1, t2;         // the two encoders' tri-grids
  Tensor mask_occluded;  // [3,D,H,W] binary, 1 = occluded from input view
  cam::CameraPose input_pose;
  cam::CameraIntrinsics intr;
};

// (1 - occluded) * t1 + occluded * t2, cellwise with channel broadcast.
// Selection is exact: every output cell is bit-identical to the matching
// cell of exactly one input.
Tensor stitch(const Tensor& t1, const Tensor& t2, const Tensor& occluded);

// Full inversion: run both encoders, derive the occlusion mask from the
// first encoder's first-pass render depth, stitch. Parameters are never
// mutated.
InversionResult invert(const Tensor& image, const cam::CameraPose& pose,
                       const cam::CameraIntrinsics& intr,
                       const enc::Encoder& e1, const enc::Encoder& e2,
                       const gen::Generator& g, const render::Decoder& dec,
                       const render::RenderConfig& rc, i64 vis_volume);

// Volumetric render of the stitched tri-grid at any pose.
render::RenderOutput render_novel(const InversionResult& result,
                                  const render::Decoder& dec,
                                  const cam::CameraPose& pose,
                                  const render::RenderConfig& rc);

// n_views renders at yaws 2*pi*k/n_views (k = 0..n_views-1), pitch 0,
// orbit radius; view 0 is the front render.
std::vector<render::RenderOutput> render_360(const InversionResult& result,
                                             const render::Decoder& dec,
                                             i64 n_views,
                                             const render::RenderConfig& rc);

// Density level where one render sample step attenuates transmittance to
// one half; the default iso-surface for mesh export.
double default_density_threshold(const render::RenderConfig& rc);

// Iso-surface of the decoded density over a grid_res^3 lattice spanning
// the scene cube. Empty iso-surface yields an empty mesh.
io::Mesh export_mesh(const InversionResult& result,
                     const render::Decoder& dec, i64 grid_res,
                     double density_threshold);

}  // namespace tg::dual
