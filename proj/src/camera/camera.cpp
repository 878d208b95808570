// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "camera/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace tg::cam {

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

Vec3 matvec(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
          m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Vec3 matvec_t(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
          m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
          m[2] * v[0] + m[5] * v[1] + m[8] * v[2]};
}

Mat3 matmul3(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return c;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (cx < 0.0 || cx > 1.0 || cy < 0.0 || cy > 1.0)
    throw std::invalid_argument("intrinsics: principal point outside [0,1]");
}

void CameraPose::validate() const {
  const Mat3& r = rotation;
  // R^T R = I
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += r[k * 3 + i] * r[k * 3 + j];
      const double want = i == j ? 1.0 : 0.0;
      if (std::fabs(s - want) > 1e-6)
        throw std::invalid_argument("pose: rotation is not orthonormal");
    }
  const double det =
      r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
      r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (std::fabs(det - 1.0) > 1e-6)
    throw std::invalid_argument("pose: rotation determinant is not +1");
  for (double v : translation)
    if (!std::isfinite(v))
      throw std::invalid_argument("pose: non-finite translation");
}

CameraPose pose_from_orbit(double yaw, double pitch, double radius) {
  if (!std::isfinite(yaw) || !std::isfinite(pitch) || !std::isfinite(radius))
    throw std::invalid_argument("pose_from_orbit: non-finite input");
  if (!(radius > 0.0))
    throw std::invalid_argument("pose_from_orbit: radius must be positive");
  if (std::fabs(pitch) > 1.54)  // ~88 degrees, up vector degenerates beyond
    throw std::invalid_argument("pose_from_orbit: pitch too close to a pole");

  const Vec3 pos = {radius * std::sin(yaw) * std::cos(pitch),
                    radius * std::sin(pitch),
                    radius * std::cos(yaw) * std::cos(pitch)};
  const Vec3 fwd = normalized({-pos[0], -pos[1], -pos[2]});
  // camera y points image-down; build it from world-down for an upright frame
  const Vec3 down{0.0, -1.0, 0.0};
  const double dz = dot(down, fwd);
  Vec3 ydir = {down[0] - dz * fwd[0], down[1] - dz * fwd[1],
               down[2] - dz * fwd[2]};
  ydir = normalized(ydir);
  const Vec3 xdir = cross(ydir, fwd);

  CameraPose p;
  // columns are the camera axes expressed in world coordinates
  p.rotation = {xdir[0], ydir[0], fwd[0],
                xdir[1], ydir[1], fwd[1],
                xdir[2], ydir[2], fwd[2]};
  p.translation = pos;
  return p;
}

std::vector<Ray> generate_rays(const CameraPose& pose,
                               const CameraIntrinsics& intr, int resolution) {
  if (resolution < 1)
    throw std::invalid_argument("generate_rays: resolution must be >= 1");
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(resolution) * resolution);
  for (int iv = 0; iv < resolution; ++iv) {
    for (int iu = 0; iu < resolution; ++iu) {
      const double u = (iu + 0.5) / resolution;
      const double v = (iv + 0.5) / resolution;
      const Vec3 dir_cam = {(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy,
                            1.0};
      rays.push_back(
          {pose.translation, normalized(matvec(pose.rotation, dir_cam))});
    }
  }
  return rays;
}

Vec3 unproject(double u, double v, double depth, const CameraPose& pose,
               const CameraIntrinsics& intr) {
  if (!(depth > 0.0)) throw std::invalid_argument("unproject: depth <= 0");
  const Vec3 pc = {depth * (u - intr.cx) / intr.fx,
                   depth * (v - intr.cy) / intr.fy, depth};
  const Vec3 pw = matvec(pose.rotation, pc);
  return {pw[0] + pose.translation[0], pw[1] + pose.translation[1],
          pw[2] + pose.translation[2]};
}

std::optional<Projection> try_project(const Vec3& point,
                                      const CameraPose& pose,
                                      const CameraIntrinsics& intr) {
  const Vec3 rel = {point[0] - pose.translation[0],
                    point[1] - pose.translation[1],
                    point[2] - pose.translation[2]};
  const Vec3 pc = matvec_t(pose.rotation, rel);
  if (!(pc[2] > 0.0)) return std::nullopt;
  return Projection{intr.fx * pc[0] / pc[2] + intr.cx,
                    intr.fy * pc[1] / pc[2] + intr.cy, pc[2]};
}

Projection project(const Vec3& point, const CameraPose& pose,
                   const CameraIntrinsics& intr) {
  auto p = try_project(point, pose, intr);
  if (!p) throw std::domain_error("project: point not in front of camera");
  return *p;
}

CameraPose mirror_pose(const CameraPose& pose) {
  // reflect across x=0 and flip the camera x axis to keep det +1
  CameraPose m = pose;
  // R' = diag(-1,1,1) * R * diag(-1,1,1): negate row 0 and column 0
  m.rotation[1] = -pose.rotation[1];
  m.rotation[2] = -pose.rotation[2];
  m.rotation[3] = -pose.rotation[3];
  m.rotation[6] = -pose.rotation[6];
  m.translation[0] = -pose.translation[0];
  return m;
}

std::array<double, 25> pose_record(const CameraPose& pose,
                                   const CameraIntrinsics& intr) {
  std::array<double, 25> r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r[i * 4 + j] = pose.rotation[i * 3 + j];
    r[i * 4 + 3] = pose.translation[static_cast<size_t>(i)];
  }
  r[15] = 1.0;
  r[16] = intr.fx;
  r[18] = intr.cx;
  r[20] = intr.fy;
  r[21] = intr.cy;
  r[24] = 1.0;
  return r;
}

std::pair<CameraPose, CameraIntrinsics> parse_pose_record(
    const std::array<double, 25>& rec) {
  for (double v : rec)
    if (!std::isfinite(v))
      throw std::invalid_argument("pose record: non-finite entry");
  if (rec[12] != 0.0 || rec[13] != 0.0 || rec[14] != 0.0 || rec[15] != 1.0)
    throw std::invalid_argument("pose record: bad homogeneous row");
  CameraPose pose;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) pose.rotation[i * 3 + j] = rec[i * 4 + j];
    pose.translation[static_cast<size_t>(i)] = rec[i * 4 + 3];
  }
  pose.validate();
  const auto k = [&](int i, int j) { return rec[16 + i * 3 + j]; };
  if (k(0, 1) != 0.0 || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 ||
      k(2, 2) != 1.0)
    throw std::invalid_argument("pose record: bad intrinsic pattern");
  CameraIntrinsics intr;
  intr.fx = k(0, 0);
  intr.cx = k(0, 2);
  intr.fy = k(1, 1);
  intr.cy = k(1, 2);
  intr.validate();
  return {pose, intr};
}

Tensor pose_record_tensor(const std::vector<std::array<double, 25>>& recs) {
  Tensor t = Tensor::zeros({static_cast<i64>(recs.size()), 25});
  double* p = t.data();
  for (const auto& r : recs) {
    for (double v : r) *p++ = v;
  }
  return t;
}

}  // namespace tg::cam
