// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "dual/dual.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "core/autograd.hpp"
#include "occlusion/occlusion.hpp"

namespace tg::dual {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_trigrid(const Tensor& t, const char* name) {
  if (t.ndim() != 5 || t.dim(0) != 3) {
    throw std::invalid_argument(std::string(name) +
                                " must be a [3,D,C,H,W] tri-grid");
  }
}

}  // namespace

Tensor stitch(const Tensor& t1, const Tensor& t2, const Tensor& occluded) {
  check_trigrid(t1, "t1");
  check_trigrid(t2, "t2");
  for (int i = 0; i < 5; ++i) {
    if (t1.dim(i) != t2.dim(i)) {
      throw std::invalid_argument("stitch: tri-grid shapes differ");
    }
  }
  if (occluded.ndim() != 4 || occluded.dim(0) != t1.dim(0) ||
      occluded.dim(1) != t1.dim(1) || occluded.dim(2) != t1.dim(3) ||
      occluded.dim(3) != t1.dim(4)) {
    throw std::invalid_argument("stitch: mask must be [3,D,H,W]");
  }

  const double* m = occluded.data();
  for (i64 i = 0; i < occluded.numel(); ++i) {
    if (m[i] != 0.0 && m[i] != 1.0) {
      throw std::invalid_argument("stitch: mask must be binary");
    }
  }

  // Cellwise selection, copied verbatim from whichever source the mask
  // picks so stitched cells stay bit-identical to their origin.
  const i64 d = t1.dim(1), c = t1.dim(2), h = t1.dim(3), w = t1.dim(4);
  std::vector<double> out(static_cast<size_t>(t1.numel()));
  const double* a = t1.data();
  const double* b = t2.data();
  const i64 hw = h * w;
  for (i64 p = 0; p < 3; ++p) {
    for (i64 di = 0; di < d; ++di) {
      const double* mp = m + (p * d + di) * hw;
      for (i64 ci = 0; ci < c; ++ci) {
        const i64 base = ((p * d + di) * c + ci) * hw;
        for (i64 i = 0; i < hw; ++i) {
          out[static_cast<size_t>(base + i)] =
              mp[i] == 1.0 ? b[base + i] : a[base + i];
        }
      }
    }
  }
  return Tensor::from_data(t1.shape(), std::move(out));
}

InversionResult invert(const Tensor& image, const cam::CameraPose& pose,
                       const cam::CameraIntrinsics& intr,
                       const enc::Encoder& e1, const enc::Encoder& e2,
                       const gen::Generator& g, const render::Decoder& dec,
                       const render::RenderConfig& rc, i64 vis_volume) {
  NoGradGuard ng;
  enc::EncoderForward f1 = e1.forward(image, pose, intr, g, dec, rc);
  enc::EncoderForward f2 = e2.forward(image, pose, intr, g, dec, rc);

  // The mask comes from the first-pass render of the visible-region
  // encoder: its depth already commits to the input view's geometry and
  // does not move when the residual stage edits the tri-grid.
  occl::VisibilityVolume vol =
      occl::visibility_volume(f1.first_render.depth, pose, intr, vis_volume);
  Tensor visible =
      occl::to_trigrid_mask(vol, f1.t_final.dim(1), f1.t_final.dim(3));

  InversionResult result;
  result.t1 = f1.t_final;
  result.t2 = f2.t_final;
  result.mask_occluded = occl::occlusion_of(visible);
  result.stitched = stitch(result.t1, result.t2, result.mask_occluded);
  result.input_pose = pose;
  result.intr = intr;
  return result;
}

render::RenderOutput render_novel(const InversionResult& result,
                                  const render::Decoder& dec,
                                  const cam::CameraPose& pose,
                                  const render::RenderConfig& rc) {
  return render::render(result.stitched, dec, pose, result.intr, rc);
}

std::vector<render::RenderOutput> render_360(const InversionResult& result,
                                             const render::Decoder& dec,
                                             i64 n_views,
                                             const render::RenderConfig& rc) {
  if (n_views < 1) throw std::invalid_argument("render_360: n_views < 1");
  std::vector<render::RenderOutput> views;
  views.reserve(static_cast<size_t>(n_views));
  for (i64 k = 0; k < n_views; ++k) {
    double yaw = 2.0 * kPi * double(k) / double(n_views);
    cam::CameraPose pose = cam::pose_from_orbit(yaw, 0.0, gen::kOrbitRadius);
    views.push_back(render_novel(result, dec, pose, rc));
  }
  return views;
}

double default_density_threshold(const render::RenderConfig& rc) {
  double step = (rc.far_plane - rc.near_plane) / double(rc.n_samples);
  return std::log(2.0) / step;
}

io::Mesh export_mesh(const InversionResult& result,
                     const render::Decoder& dec, i64 grid_res,
                     double density_threshold) {
  if (grid_res < 2) throw std::invalid_argument("export_mesh: grid_res < 2");
  NoGradGuard ng;

  const double spacing = 2.0 / double(grid_res - 1);
  std::vector<double> values;
  values.reserve(static_cast<size_t>(grid_res * grid_res * grid_res));

  // Decode one x-slab at a time; a full lattice of feature vectors would
  // be large at high resolutions and the slabs are independent.
  const i64 slab = grid_res * grid_res;
  for (i64 xi = 0; xi < grid_res; ++xi) {
    std::vector<double> pts(static_cast<size_t>(slab * 3));
    double x = -1.0 + spacing * double(xi);
    size_t at = 0;
    for (i64 yi = 0; yi < grid_res; ++yi) {
      double y = -1.0 + spacing * double(yi);
      for (i64 zi = 0; zi < grid_res; ++zi) {
        pts[at++] = x;
        pts[at++] = y;
        pts[at++] = -1.0 + spacing * double(zi);
      }
    }
    Tensor points = Tensor::from_data({slab, 3}, std::move(pts));
    auto [sigma, color] =
        dec.decode(render::sample_features(result.stitched, points));
    const double* s = sigma.data();
    values.insert(values.end(), s, s + slab);
  }

  return marching_cubes(values, grid_res, density_threshold, -1.0, spacing);
}

}  // namespace tg::dual
