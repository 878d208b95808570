// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "camera/camera.hpp"
#include "core/rng.hpp"

using namespace tg;
using namespace tg::cam;

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_vec(const Vec3& got, const Vec3& want, double tol) {
  CHECK(std::fabs(got[0] - want[0]) <= tol);
  CHECK(std::fabs(got[1] - want[1]) <= tol);
  CHECK(std::fabs(got[2] - want[2]) <= tol);
}

}  // namespace

TEST_CASE("orbit pose: canonical front camera") {
  const CameraPose p = pose_from_orbit(0.0, 0.0, 2.7);
  p.validate();
  check_vec(p.translation, {0.0, 0.0, 2.7}, 1e-12);
  check_vec(p.optical_axis(), {0.0, 0.0, -1.0}, 1e-12);
}

TEST_CASE("orbit pose: back and side cameras") {
  const CameraPose back = pose_from_orbit(kPi, 0.0, 2.7);
  back.validate();
  check_vec(back.translation, {0.0, 0.0, -2.7}, 1e-12);
  check_vec(back.optical_axis(), {0.0, 0.0, 1.0}, 1e-12);

  const CameraPose side = pose_from_orbit(kPi / 2.0, 0.0, 2.7);
  side.validate();
  check_vec(side.translation, {2.7, 0.0, 0.0}, 1e-12);
  check_vec(side.optical_axis(), {-1.0, 0.0, 0.0}, 1e-12);
}

TEST_CASE("orbit pose: rejects bad inputs") {
  CHECK_THROWS_AS(pose_from_orbit(0.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pose_from_orbit(0.0, 0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(pose_from_orbit(0.0, 1.56, 2.7), std::invalid_argument);
  CHECK_THROWS_AS(pose_from_orbit(0.0, -1.56, 2.7), std::invalid_argument);
  const double nan = std::nan("");
  CHECK_THROWS_AS(pose_from_orbit(nan, 0.0, 2.7), std::invalid_argument);
  CHECK_THROWS_AS(pose_from_orbit(0.0, nan, 2.7), std::invalid_argument);
  CHECK_THROWS_AS(pose_from_orbit(0.0, 0.0, nan), std::invalid_argument);
}

TEST_CASE("orbit poses always look at the origin") {
  Rng rng = Rng::seeded(11, "camera.lookat");
  const CameraIntrinsics intr;
  for (int i = 0; i < 200; ++i) {
    const double yaw = (rng.uniform() * 2.0 - 1.0) * kPi;
    const double pitch = (rng.uniform() * 2.0 - 1.0) * 1.2;
    const double radius = 1.5 + rng.uniform() * 2.5;
    const CameraPose p = pose_from_orbit(yaw, pitch, radius);
    p.validate();
    const Projection c = project({0.0, 0.0, 0.0}, p, intr);
    CHECK(std::fabs(c.u - intr.cx) <= 1e-4);
    CHECK(std::fabs(c.v - intr.cy) <= 1e-4);
    CHECK(std::fabs(c.depth - radius) <= 1e-9);
  }
}

TEST_CASE("ray grid: center pixel rides the optical axis") {
  const CameraIntrinsics intr;
  // odd resolution puts one pixel center exactly on the principal point
  const int res = 25;
  for (double yaw : {0.0, 0.7, -2.1}) {
    const CameraPose p = pose_from_orbit(yaw, 0.3, 2.7);
    const auto rays = generate_rays(p, intr, res);
    REQUIRE(rays.size() == static_cast<size_t>(res) * res);
    const Ray& center = rays[12 * res + 12];
    check_vec(center.direction, p.optical_axis(), 1e-12);
    for (const Ray& r : rays) {
      check_vec(r.origin, p.translation, 0.0);
      CHECK(std::fabs(dot(r.direction, r.direction) - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("ray grid: corner pixel matches the pinhole formula") {
  const CameraIntrinsics intr;
  const CameraPose p = pose_from_orbit(0.42, -0.2, 2.7);
  const int res = 16;
  const auto rays = generate_rays(p, intr, res);

  const auto expect_dir = [&](int iu, int iv) {
    const double u = (iu + 0.5) / res;
    const double v = (iv + 0.5) / res;
    const Vec3 cam = {(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
    return normalized(matvec(p.rotation, cam));
  };
  check_vec(rays[0].direction, expect_dir(0, 0), 1e-12);
  check_vec(rays[res - 1].direction, expect_dir(res - 1, 0), 1e-12);
  check_vec(rays[(res - 1) * res].direction, expect_dir(0, res - 1), 1e-12);
  check_vec(rays[res * res - 1].direction, expect_dir(res - 1, res - 1),
            1e-12);

  CHECK_THROWS_AS(generate_rays(p, intr, 0), std::invalid_argument);
}

TEST_CASE("unproject: principal point walks the optical axis") {
  const CameraIntrinsics intr;
  const CameraPose p = pose_from_orbit(1.1, 0.4, 2.7);
  for (double d : {0.5, 1.0, 2.7}) {
    const Vec3 axis = p.optical_axis();
    const Vec3 want = {p.translation[0] + d * axis[0],
                       p.translation[1] + d * axis[1],
                       p.translation[2] + d * axis[2]};
    check_vec(unproject(intr.cx, intr.cy, d, p, intr), want, 1e-12);
  }
  CHECK_THROWS_AS(unproject(0.5, 0.5, 0.0, p, intr), std::invalid_argument);
  CHECK_THROWS_AS(unproject(0.5, 0.5, -1.0, p, intr), std::invalid_argument);
}

TEST_CASE("unproject agrees with the generated ray grid") {
  const CameraIntrinsics intr;
  const CameraPose p = pose_from_orbit(-0.8, 0.25, 3.1);
  const int res = 9;
  const auto rays = generate_rays(p, intr, res);
  const Vec3 axis = p.optical_axis();
  const double d = 1.7;
  for (int iv = 0; iv < res; ++iv) {
    for (int iu = 0; iu < res; ++iu) {
      const Ray& r = rays[static_cast<size_t>(iv) * res + iu];
      // camera depth d sits at ray parameter d / cos(angle to axis)
      const double t = d / dot(r.direction, axis);
      const Vec3 want = {r.origin[0] + t * r.direction[0],
                         r.origin[1] + t * r.direction[1],
                         r.origin[2] + t * r.direction[2]};
      const Vec3 got =
          unproject((iu + 0.5) / res, (iv + 0.5) / res, d, p, intr);
      check_vec(got, want, 1e-10);
    }
  }
}

TEST_CASE("project: axis point, hand-computed offset, behind-camera error") {
  const CameraIntrinsics intr;
  const CameraPose front = pose_from_orbit(0.0, 0.0, 2.7);

  const Projection on_axis = project({0.0, 0.0, 1.7}, front, intr);
  CHECK(std::fabs(on_axis.u - 0.5) <= 1e-12);
  CHECK(std::fabs(on_axis.v - 0.5) <= 1e-12);
  CHECK(std::fabs(on_axis.depth - 1.0) <= 1e-12);

  // front camera axes in world coords: x=(1,0,0), y=(0,-1,0), z=(0,0,-1),
  // so world (0.2, 0.3, 0.7) sits at camera (0.2, -0.3, 2.0)
  const Projection off = project({0.2, 0.3, 0.7}, front, intr);
  CHECK(std::fabs(off.u - (4.26 * 0.1 + 0.5)) <= 1e-12);
  CHECK(std::fabs(off.v - (0.5 - 4.26 * 0.15)) <= 1e-12);
  CHECK(std::fabs(off.depth - 2.0) <= 1e-12);

  CHECK_FALSE(try_project({0.0, 0.0, 2.7}, front, intr).has_value());
  CHECK_FALSE(try_project({0.0, 0.0, 3.5}, front, intr).has_value());
  CHECK_THROWS_AS(project({0.0, 0.0, 3.5}, front, intr), std::domain_error);
}

TEST_CASE("project and unproject round-trip over random cameras") {
  Rng rng = Rng::seeded(7, "camera.roundtrip");
  const CameraIntrinsics intr;
  for (int i = 0; i < 1000; ++i) {
    const double yaw = (rng.uniform() * 2.0 - 1.0) * kPi;
    const double pitch = (rng.uniform() * 2.0 - 1.0) * 1.2;
    const double radius = 1.5 + rng.uniform() * 2.5;
    const CameraPose p = pose_from_orbit(yaw, pitch, radius);
    const double u = rng.uniform() * 1.4 - 0.2;
    const double v = rng.uniform() * 1.4 - 0.2;
    const double d = 0.3 + rng.uniform() * 4.7;
    const Projection back = project(unproject(u, v, d, p, intr), p, intr);
    CHECK(std::fabs(back.u - u) <= 1e-5);
    CHECK(std::fabs(back.v - v) <= 1e-5);
    CHECK(std::fabs(back.depth - d) <= 1e-5);
  }
}

TEST_CASE("mirror pose: involution, front fixed point, yaw negation") {
  const CameraPose front = pose_from_orbit(0.0, 0.0, 2.7);
  const CameraPose front_m = mirror_pose(front);
  for (int i = 0; i < 9; ++i)
    CHECK(std::fabs(front_m.rotation[i] - front.rotation[i]) <= 1e-12);
  check_vec(front_m.translation, front.translation, 1e-12);

  Rng rng = Rng::seeded(3, "camera.mirror");
  for (int i = 0; i < 50; ++i) {
    const double yaw = (rng.uniform() * 2.0 - 1.0) * kPi;
    const double pitch = (rng.uniform() * 2.0 - 1.0) * 1.2;
    const CameraPose p = pose_from_orbit(yaw, pitch, 2.7);
    const CameraPose m = mirror_pose(p);
    m.validate();
    const CameraPose mm = mirror_pose(m);
    for (int k = 0; k < 9; ++k)
      CHECK(std::fabs(mm.rotation[k] - p.rotation[k]) <= 1e-6);
    check_vec(mm.translation, p.translation, 1e-6);

    const CameraPose neg = pose_from_orbit(-yaw, pitch, 2.7);
    for (int k = 0; k < 9; ++k)
      CHECK(std::fabs(m.rotation[k] - neg.rotation[k]) <= 1e-9);
    check_vec(m.translation, neg.translation, 1e-9);
  }

  const CameraPose tilt30 = pose_from_orbit(kPi / 6.0, 0.0, 2.7);
  const CameraPose want = pose_from_orbit(-kPi / 6.0, 0.0, 2.7);
  const CameraPose got = mirror_pose(tilt30);
  for (int k = 0; k < 9; ++k)
    CHECK(std::fabs(got.rotation[k] - want.rotation[k]) <= 1e-12);
  check_vec(got.translation, want.translation, 1e-12);
}

TEST_CASE("pose records round-trip bit-exactly") {
  const CameraIntrinsics intr;
  Rng rng = Rng::seeded(5, "camera.record");
  for (int i = 0; i < 20; ++i) {
    const double yaw = (rng.uniform() * 2.0 - 1.0) * kPi;
    const double pitch = (rng.uniform() * 2.0 - 1.0) * 1.2;
    const CameraPose p = pose_from_orbit(yaw, pitch, 2.7);
    const auto rec = pose_record(p, intr);
    const auto [p2, intr2] = parse_pose_record(rec);
    for (int k = 0; k < 9; ++k) CHECK(p2.rotation[k] == p.rotation[k]);
    for (int k = 0; k < 3; ++k)
      CHECK(p2.translation[static_cast<size_t>(k)] ==
            p.translation[static_cast<size_t>(k)]);
    CHECK(intr2.fx == intr.fx);
    CHECK(intr2.fy == intr.fy);
    CHECK(intr2.cx == intr.cx);
    CHECK(intr2.cy == intr.cy);
    // layout: rows 0..2 of the 4x4 hold [R | t], row 3 is (0,0,0,1)
    CHECK(rec[3] == p.translation[0]);
    CHECK(rec[7] == p.translation[1]);
    CHECK(rec[11] == p.translation[2]);
    CHECK(rec[15] == 1.0);
    CHECK(rec[16] == intr.fx);
    CHECK(rec[20] == intr.fy);
    CHECK(rec[24] == 1.0);
  }
}

TEST_CASE("malformed pose records are rejected") {
  const CameraIntrinsics intr;
  const CameraPose p = pose_from_orbit(0.5, 0.1, 2.7);
  const auto good = pose_record(p, intr);

  auto bad = good;
  bad[14] = 0.25;  // homogeneous row must be (0,0,0,1)
  CHECK_THROWS_AS(parse_pose_record(bad), std::invalid_argument);

  bad = good;
  bad[0] = 7.0;  // rotation block no longer orthonormal
  CHECK_THROWS_AS(parse_pose_record(bad), std::invalid_argument);

  bad = good;
  bad[17] = 0.3;  // intrinsic skew slot must be zero
  CHECK_THROWS_AS(parse_pose_record(bad), std::invalid_argument);

  bad = good;
  bad[16] = -4.26;  // negative focal length
  CHECK_THROWS_AS(parse_pose_record(bad), std::invalid_argument);

  bad = good;
  bad[5] = std::nan("");
  CHECK_THROWS_AS(parse_pose_record(bad), std::invalid_argument);
}

TEST_CASE("pose record tensor stacks rows in order") {
  const CameraIntrinsics intr;
  const CameraPose a = pose_from_orbit(0.0, 0.0, 2.7);
  const CameraPose b = pose_from_orbit(1.0, 0.2, 2.7);
  const auto ra = pose_record(a, intr);
  const auto rb = pose_record(b, intr);
  const Tensor t = pose_record_tensor({ra, rb});
  REQUIRE(t.shape() == Shape{2, 25});
  for (int k = 0; k < 25; ++k) {
    CHECK(t.data()[k] == ra[static_cast<size_t>(k)]);
    CHECK(t.data()[25 + k] == rb[static_cast<size_t>(k)]);
  }
}
