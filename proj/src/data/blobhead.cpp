// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "data/blobhead.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tg::data {

namespace {

struct Blob {
  cam::Vec3 center;
  double radius;
  std::array<double, 3> color;
};

double dist(const cam::Vec3& a, const cam::Vec3& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

render::DensityField blob_head_field(std::uint64_t scene_seed,
                                     bool symmetric) {
  Rng rng = Rng::seeded(scene_seed, "blob-head");

  std::vector<Blob> blobs;
  Blob head;
  head.center = {rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                 rng.uniform(-0.02, 0.02)};
  if (symmetric) head.center[0] = 0.0;
  head.radius = rng.uniform(0.16, 0.20);
  head.color = {rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9),
                rng.uniform(0.2, 0.9)};
  blobs.push_back(head);

  // attach 2..4 lobes to the head surface; total extent stays under 0.35
  int n_lobes = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < n_lobes; ++i) {
    double az = rng.uniform(0.0, 2.0 * M_PI);
    double el = rng.uniform(-0.9, 0.9);
    cam::Vec3 dir = {std::cos(el) * std::sin(az), std::sin(el),
                     std::cos(el) * std::cos(az)};
    Blob lobe;
    lobe.radius = rng.uniform(0.04, 0.07);
    double reach = head.radius + 0.35 * lobe.radius;
    lobe.center = {head.center[0] + reach * dir[0],
                   head.center[1] + reach * dir[1],
                   head.center[2] + reach * dir[2]};
    lobe.color = {rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0),
                  rng.uniform(0.1, 1.0)};
    blobs.push_back(lobe);
    if (symmetric && std::abs(lobe.center[0]) > 1e-12) {
      Blob twin = lobe;
      twin.center[0] = -twin.center[0];
      blobs.push_back(twin);
    }
  }

  // soft-surface density: each blob contributes a sigmoid shell around its
  // signed distance; contributions sum, colors blend by contribution weight
  const double kTau = 0.015;    // surface softness, world units
  const double kSigma0 = 40.0;  // opaque-core density
  return [blobs, kTau, kSigma0](const cam::Vec3& p) {
    render::FieldSample out;
    double wsum = 0.0;
    std::array<double, 3> rgb = {0.0, 0.0, 0.0};
    for (const Blob& b : blobs) {
      double sd = dist(p, b.center) - b.radius;
      double w = 1.0 / (1.0 + std::exp(std::clamp(sd / kTau, -40.0, 40.0)));
      wsum += w;
      for (int c = 0; c < 3; ++c) rgb[c] += w * b.color[c];
    }
    if (wsum <= 1e-12) return out;  // empty space
    out.sigma = kSigma0 * std::min(wsum, 1.0);
    // gentle vertical shading so the scene has non-constant texture
    double shade = 0.85 + 0.3 * p[1];
    for (int c = 0; c < 3; ++c) {
      out.rgb[c] = std::clamp(rgb[c] / wsum * shade, 0.0, 1.0);
    }
    return out;
  };
}

}  // namespace tg::data
