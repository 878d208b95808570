// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include "camera/camera.hpp"
#include "core/autograd.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "doctest.h"
#include "occlusion/occlusion.hpp"

using namespace tg;
using namespace tg::occl;
using doctest::Approx;

namespace {

constexpr double kNear = 1.2;
constexpr double kFar = 4.2;
constexpr double kRadius = 2.7;

Tensor constant_depth(i64 res, double value) {
  return Tensor::full({res, res}, value);
}

// Camera-depth of the first hit against a union of spheres along the pixel
// ray, kFar when the ray misses everything. Shares no code with the depth
// lookup under test.
struct Sphere {
  cam::Vec3 center;
  double radius;
};

double sphere_scene_depth(const std::vector<Sphere>& scene, double u, double v,
                          const cam::CameraPose& pose,
                          const cam::CameraIntrinsics& intr) {
  // direction with unit camera z, so the ray parameter is camera depth
  cam::Vec3 dir_cam = {(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
  cam::Vec3 w = cam::matvec(pose.rotation, dir_cam);
  const cam::Vec3& o = pose.translation;
  double best = kFar;
  for (const auto& s : scene) {
    cam::Vec3 oc = {o[0] - s.center[0], o[1] - s.center[1],
                    o[2] - s.center[2]};
    double a = cam::dot(w, w);
    double b = 2.0 * cam::dot(w, oc);
    double c = cam::dot(oc, oc) - s.radius * s.radius;
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;
    double t = (-b - std::sqrt(disc)) / (2.0 * a);
    if (t > 0.0) best = std::min(best, t);
  }
  return best;
}

Tensor depth_map_of_scene(const std::vector<Sphere>& scene, i64 res,
                          const cam::CameraPose& pose,
                          const cam::CameraIntrinsics& intr) {
  Tensor d = Tensor::zeros({res, res});
  for (i64 iv = 0; iv < res; ++iv)
    for (i64 iu = 0; iu < res; ++iu) {
      double u = (double(iu) + 0.5) / double(res);
      double v = (double(iv) + 0.5) / double(res);
      d.data()[iv * res + iu] = sphere_scene_depth(scene, u, v, pose, intr);
    }
  return d;
}

double dist_to_scene_surface(const std::vector<Sphere>& scene,
                             const cam::Vec3& p) {
  double best = 1e30;
  for (const auto& s : scene) {
    double dx = p[0] - s.center[0];
    double dy = p[1] - s.center[1];
    double dz = p[2] - s.center[2];
    best = std::min(best,
                    std::abs(std::sqrt(dx * dx + dy * dy + dz * dz) - s.radius));
  }
  return best;
}

}  // namespace

TEST_CASE("constant depth maps reproduce the exact-surface oracle") {
  cam::CameraIntrinsics intr;
  auto pose = cam::pose_from_orbit(0.4, 0.2, kRadius);
  const i64 v = 16;

  for (double dval : {kFar, kRadius, kNear}) {
    Tensor depth = constant_depth(48, dval);
    auto vol = visibility_volume(depth, pose, intr, v);
    auto oracle = oracle_raycast([&](double, double) { return dval; }, pose,
                                 intr, v);
    REQUIRE(vol.v == v);
    REQUIRE(vol.grid.size() == size_t(v * v * v));
    // a constant map looks the same through any pixel, so the two paths
    // must agree on every voxel
    CHECK(vol.grid == oracle.grid);
  }
}

TEST_CASE("visibility against an empty scene is exactly the frustum") {
  cam::CameraIntrinsics intr;
  auto pose = cam::pose_from_orbit(0.0, 0.0, kRadius);
  const i64 v = 32;
  auto vol = visibility_volume(constant_depth(64, kFar), pose, intr, v);

  i64 n_vis = 0;
  for (i64 ix = 0; ix < v; ++ix)
    for (i64 iy = 0; iy < v; ++iy)
      for (i64 iz = 0; iz < v; ++iz) {
        cam::Vec3 p = {VisibilityVolume::center(ix, v),
                       VisibilityVolume::center(iy, v),
                       VisibilityVolume::center(iz, v)};
        auto proj = cam::try_project(p, pose, intr);
        bool in_frustum = proj && proj->u >= 0.0 && proj->u <= 1.0 &&
                          proj->v >= 0.0 && proj->v <= 1.0;
        // every cube voxel is closer than kFar from a radius-2.7 orbit, so
        // in-frustum and visible coincide for the empty scene
        CHECK(bool(vol.at(ix, iy, iz)) == in_frustum);
        n_vis += vol.at(ix, iy, iz);
      }
  CHECK(n_vis > 0);
  CHECK(n_vis < v * v * v);  // the narrow default lens sees a slab, not all

  // near-axis voxels sit in the frustum; far-corner voxels do not
  CHECK(vol.at(v / 2, v / 2, v / 2) == 1);
  CHECK(vol.at(0, 0, 0) == 0);
  CHECK(vol.at(v - 1, v - 1, v - 1) == 0);
}

TEST_CASE("a wall at the camera midplane splits the cube front from back") {
  cam::CameraIntrinsics intr;
  auto pose = cam::pose_from_orbit(0.0, 0.0, kRadius);  // at +z looking -z
  const i64 v = 16;
  // every pixel reports depth 2.7, a world plane through the origin
  auto vol = visibility_volume(constant_depth(32, kRadius), pose, intr, v);
  const double eps = vol.eps_vis();

  for (i64 ix = 0; ix < v; ++ix)
    for (i64 iy = 0; iy < v; ++iy)
      for (i64 iz = 0; iz < v; ++iz) {
        cam::Vec3 p = {VisibilityVolume::center(ix, v),
                       VisibilityVolume::center(iy, v),
                       VisibilityVolume::center(iz, v)};
        auto proj = cam::try_project(p, pose, intr);
        if (!proj || proj->u < 0.0 || proj->u > 1.0 || proj->v < 0.0 ||
            proj->v > 1.0) {
          CHECK(vol.at(ix, iy, iz) == 0);
          continue;
        }
        // camera depth of (x,y,z) from the canonical front is 2.7 - z
        double want_depth = kRadius - p[2];
        CHECK(proj->depth == Approx(want_depth).epsilon(1e-9));
        CHECK(bool(vol.at(ix, iy, iz)) == (want_depth <= kRadius + eps));
      }
}

TEST_CASE("sphere scene: occluder shadows the cone behind it") {
  cam::CameraIntrinsics intr;
  auto pose = cam::pose_from_orbit(0.0, 0.0, kRadius);
  std::vector<Sphere> scene = {{{0.0, 0.0, 0.0}, 0.3}};
  const i64 v = 32;
  Tensor depth = depth_map_of_scene(scene, 64, pose, intr);
  auto vol = visibility_volume(depth, pose, intr, v);
  const double eps = vol.eps_vis();

  auto vox_of = [&](double c) {
    // index of the voxel whose center is nearest to coordinate c
    double g = (c + 1.0) * 0.5 * double(v) - 0.5;
    return std::clamp<i64>(llround(g), 0, v - 1);
  };

  i64 mid = vox_of(0.0);
  // free space between camera and sphere front
  CHECK(vol.at(mid, mid, vox_of(0.75)) == 1);
  CHECK(vol.at(mid, mid, vox_of(0.5)) == 1);
  // deep inside and behind the sphere along the axis
  CHECK(vol.at(mid, mid, vox_of(0.0)) == 0);
  CHECK(vol.at(mid, mid, vox_of(-0.5)) == 0);
  CHECK(vol.at(mid, mid, vox_of(-0.9)) == 0);

  // front-view property: walking the central column from the camera side,
  // visibility never turns back on once lost
  bool seen_invisible = false;
  for (i64 iz = v - 1; iz >= 0; --iz) {
    bool vis = vol.at(mid, mid, iz);
    if (seen_invisible) CHECK(!vis);
    if (!vis) seen_invisible = true;
  }
  CHECK(seen_invisible);

  // oracle agreement away from the surface band
  auto oracle = oracle_raycast(
      [&](double u, double vv) {
        return sphere_scene_depth(scene, u, vv, pose, intr);
      },
      pose, intr, v);
  i64 compared = 0, agree = 0;
  for (i64 ix = 0; ix < v; ++ix)
    for (i64 iy = 0; iy < v; ++iy)
      for (i64 iz = 0; iz < v; ++iz) {
        cam::Vec3 p = {VisibilityVolume::center(ix, v),
                       VisibilityVolume::center(iy, v),
                       VisibilityVolume::center(iz, v)};
        if (dist_to_scene_surface(scene, p) <= eps) continue;
        ++compared;
        agree += vol.at(ix, iy, iz) == oracle.at(ix, iy, iz);
      }
  CHECK(compared > 25000);
  CHECK(double(agree) / double(compared) >= 0.99);
}

TEST_CASE("random scenes and poses stay above 99% oracle agreement") {
  cam::CameraIntrinsics intr;
  Rng rng = Rng::seeded(271, "occl");
  const i64 v = 32;
  for (int trial = 0; trial < 10; ++trial) {
    double yaw = rng.uniform(-3.1, 3.1);
    double pitch = rng.uniform(-1.0, 1.0);
    auto pose = cam::pose_from_orbit(yaw, pitch, kRadius);
    std::vector<Sphere> scene;
    int n_spheres = 1 + int(rng.uniform(0.0, 2.0));
    for (int s = 0; s < n_spheres; ++s)
      scene.push_back({{rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25),
                        rng.uniform(-0.25, 0.25)},
                       rng.uniform(0.2, 0.45)});

    Tensor depth = depth_map_of_scene(scene, 64, pose, intr);
    auto vol = visibility_volume(depth, pose, intr, v);
    auto oracle = oracle_raycast(
        [&](double u, double vv) {
          return sphere_scene_depth(scene, u, vv, pose, intr);
        },
        pose, intr, v);
    const double eps = vol.eps_vis();

    i64 compared = 0, agree = 0;
    for (i64 ix = 0; ix < v; ++ix)
      for (i64 iy = 0; iy < v; ++iy)
        for (i64 iz = 0; iz < v; ++iz) {
          cam::Vec3 p = {VisibilityVolume::center(ix, v),
                         VisibilityVolume::center(iy, v),
                         VisibilityVolume::center(iz, v)};
          if (dist_to_scene_surface(scene, p) <= eps) continue;
          ++compared;
          agree += vol.at(ix, iy, iz) == oracle.at(ix, iy, iz);
        }
    CHECK(double(agree) / double(compared) >= 0.99);
  }
}

TEST_CASE("deeper depth maps never shrink the visible set") {
  cam::CameraIntrinsics intr;
  Rng rng = Rng::seeded(99, "occl");
  const i64 v = 16, res = 24;
  for (int trial = 0; trial < 5; ++trial) {
    auto pose = cam::pose_from_orbit(rng.uniform(-3.0, 3.0),
                                     rng.uniform(-0.8, 0.8), kRadius);
    Tensor d1 = Tensor::zeros({res, res});
    Tensor d2 = Tensor::zeros({res, res});
    for (i64 i = 0; i < res * res; ++i) {
      d1.data()[i] = rng.uniform(kNear, kFar);
      d2.data()[i] = std::min(kFar, d1.data()[i] + rng.uniform(0.0, 0.8));
    }
    auto v1 = visibility_volume(d1, pose, intr, v);
    auto v2 = visibility_volume(d2, pose, intr, v);
    for (size_t i = 0; i < v1.grid.size(); ++i)
      if (v1.grid[i]) CHECK(v2.grid[i] == 1);
  }
}

TEST_CASE("volume to plane masks: full and empty volumes") {
  VisibilityVolume vol;
  vol.v = 8;
  vol.grid.assign(8 * 8 * 8, 1);
  Tensor full = to_trigrid_mask(vol, 3, 8);
  REQUIRE(full.shape() == std::vector<i64>({3, 3, 8, 8}));
  for (i64 i = 0; i < full.numel(); ++i) CHECK(full.data()[i] == 1.0);

  vol.grid.assign(8 * 8 * 8, 0);
  Tensor empty = to_trigrid_mask(vol, 3, 8);
  for (i64 i = 0; i < empty.numel(); ++i) CHECK(empty.data()[i] == 0.0);
}

TEST_CASE("volume to plane masks: one voxel lights one dilated cell block") {
  const i64 v = 8, d = 3, r = 8;
  VisibilityVolume vol;
  vol.v = v;
  vol.grid.assign(size_t(v * v * v), 0);
  const i64 ix = 2, iy = 5, iz = 7;
  vol.at(ix, iy, iz) = 1;
  Tensor mask = to_trigrid_mask(vol, d, r);

  // slice bins of a voxel index on a 3-slice axis over 8 voxels: the voxel
  // box may straddle a bin boundary and then lands in both bins
  auto bins = [&](i64 i) {
    i64 lo = i64(std::floor(double(i) * double(d) / double(v)));
    i64 hi = i64(std::ceil(double(i + 1) * double(d) / double(v))) - 1;
    std::vector<i64> out;
    for (i64 k = std::max<i64>(0, lo); k <= std::min<i64>(d - 1, hi); ++k)
      out.push_back(k);
    return out;
  };
  auto in_ring = [&](i64 a, i64 b) { return std::llabs(a - b) <= 1; };

  auto expected = [&](i64 pl, i64 k, i64 row, i64 col) -> double {
    i64 krow, kcol;
    std::vector<i64> ks;
    if (pl == 0) {
      krow = iy, kcol = ix, ks = bins(iz);
    } else if (pl == 1) {
      krow = iz, kcol = ix, ks = bins(iy);
    } else {
      krow = iy, kcol = iz, ks = bins(ix);
    }
    bool slice_hit = std::find(ks.begin(), ks.end(), k) != ks.end();
    return (slice_hit && in_ring(row, krow) && in_ring(col, kcol)) ? 1.0 : 0.0;
  };

  for (i64 pl = 0; pl < 3; ++pl)
    for (i64 k = 0; k < d; ++k)
      for (i64 row = 0; row < r; ++row)
        for (i64 col = 0; col < r; ++col) {
          CAPTURE(pl);
          CAPTURE(k);
          CAPTURE(row);
          CAPTURE(col);
          CHECK(mask.data()[((pl * d + k) * r + row) * r + col] ==
                expected(pl, k, row, col));
        }

  // sanity on this particular voxel: y-box [0.25,0.5] straddles the slice
  // boundary at 1/3, x-box [-0.5,-0.25] straddles -1/3
  CHECK(bins(iy) == std::vector<i64>({1, 2}));
  CHECK(bins(ix) == std::vector<i64>({0, 1}));
  CHECK(bins(iz) == std::vector<i64>({2}));
}

TEST_CASE("volume to plane masks: coarse and fine volumes bin by overlap") {
  // coarse volume, fine planes: one voxel covers a 2x2 cell footprint
  VisibilityVolume coarse;
  coarse.v = 8;
  coarse.grid.assign(8 * 8 * 8, 0);
  coarse.at(3, 4, 6) = 1;
  Tensor fine = to_trigrid_mask(coarse, 1, 16);
  // plane 0 footprint before dilation: cols 6-7, rows 8-9; after: 5-8 x 7-10
  for (i64 row = 0; row < 16; ++row)
    for (i64 col = 0; col < 16; ++col) {
      bool want = row >= 7 && row <= 10 && col >= 5 && col <= 8;
      CHECK(fine.data()[row * 16 + col] == (want ? 1.0 : 0.0));
    }

  // fine volume, coarse planes: voxel 9 of 16 lands only in cell 4 of 8
  VisibilityVolume dense;
  dense.v = 16;
  dense.grid.assign(16 * 16 * 16, 0);
  dense.at(9, 9, 9) = 1;
  Tensor coarse_mask = to_trigrid_mask(dense, 1, 8);
  for (i64 row = 0; row < 8; ++row)
    for (i64 col = 0; col < 8; ++col) {
      bool want = row >= 3 && row <= 5 && col >= 3 && col <= 5;
      CHECK(coarse_mask.data()[row * 8 + col] == (want ? 1.0 : 0.0));
    }
}

TEST_CASE("occlusion mask is the exact complement") {
  Rng rng = Rng::seeded(5, "occl");
  Tensor m = Tensor::zeros({3, 2, 4, 4});
  for (i64 i = 0; i < m.numel(); ++i)
    m.data()[i] = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
  Tensor o = occlusion_of(m);
  for (i64 i = 0; i < m.numel(); ++i) {
    CHECK(o.data()[i] + m.data()[i] == 1.0);
    CHECK((o.data()[i] == 0.0 || o.data()[i] == 1.0));
  }
  Tensor back = occlusion_of(o);
  for (i64 i = 0; i < m.numel(); ++i) CHECK(back.data()[i] == m.data()[i]);

  Tensor bad = Tensor::full({1, 1, 1, 1}, 0.5);
  CHECK_THROWS(occlusion_of(bad));
}

TEST_CASE("masking a tri-grid zeroes occluded cells and nothing else") {
  Rng rng = Rng::seeded(17, "occl");
  const i64 d = 2, c = 3, r = 4;
  Tensor g = Tensor::randn({3, d, c, r, r}, rng);
  Tensor m = Tensor::zeros({3, d, r, r});
  for (i64 i = 0; i < m.numel(); ++i)
    m.data()[i] = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;

  Tensor masked = apply_mask(g, m);
  REQUIRE(masked.shape() == g.shape());
  for (i64 pl = 0; pl < 3; ++pl)
    for (i64 k = 0; k < d; ++k)
      for (i64 ch = 0; ch < c; ++ch)
        for (i64 row = 0; row < r; ++row)
          for (i64 col = 0; col < r; ++col) {
            double mv = m.data()[((pl * d + k) * r + row) * r + col];
            double gv =
                g.data()[(((pl * d + k) * c + ch) * r + row) * r + col];
            double got =
                masked.data()[(((pl * d + k) * c + ch) * r + row) * r + col];
            CHECK(got == (mv == 0.0 ? 0.0 : gv));
          }

  // idempotent
  Tensor twice = apply_mask(masked, m);
  for (i64 i = 0; i < g.numel(); ++i)
    CHECK(twice.data()[i] == masked.data()[i]);

  // all-ones mask is the identity, all-zeros wipes everything
  Tensor ones = apply_mask(g, Tensor::ones({3, d, r, r}));
  for (i64 i = 0; i < g.numel(); ++i) CHECK(ones.data()[i] == g.data()[i]);
  Tensor zeros = apply_mask(g, Tensor::zeros({3, d, r, r}));
  for (i64 i = 0; i < g.numel(); ++i) CHECK(zeros.data()[i] == 0.0);

  CHECK_THROWS(apply_mask(g, Tensor::ones({3, d, r + 1, r + 1})));
  CHECK_THROWS(apply_mask(Tensor::ones({3, d, r, r}), m));
}

TEST_CASE("gradients flow through visible cells only") {
  Rng rng = Rng::seeded(23, "occl");
  const i64 d = 2, c = 2, r = 3;
  Tensor g = Tensor::randn({3, d, c, r, r}, rng).set_requires_grad(true);
  Tensor m = Tensor::zeros({3, d, r, r});
  for (i64 i = 0; i < m.numel(); ++i)
    m.data()[i] = (i % 3 == 0) ? 1.0 : 0.0;

  Tensor loss = ops::sum(apply_mask(g, m));
  backward(loss);
  Tensor grad = g.grad();
  REQUIRE(grad.defined());
  for (i64 pl = 0; pl < 3; ++pl)
    for (i64 k = 0; k < d; ++k)
      for (i64 ch = 0; ch < c; ++ch)
        for (i64 row = 0; row < r; ++row)
          for (i64 col = 0; col < r; ++col) {
            double mv = m.data()[((pl * d + k) * r + row) * r + col];
            double gv =
                grad.data()[(((pl * d + k) * c + ch) * r + row) * r + col];
            CHECK(gv == mv);  // d(sum)/d(cell) is the broadcast mask
          }
}
