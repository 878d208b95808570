// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Camera model shared by rendering, visibility and data generation.
// Conventions: right-handed world with y up, scene inside the [-1,1]^3
// cube; camera-to-world extrinsics; camera frame x right, y down, z
// forward (optical axis). Intrinsics are normalized by image size so one
// camera serves any resolution; image coordinates u,v live in [0,1] with
// u to the right and v downward.

#pragma once

#include <array>
#include <optional>
#include <vector>

#include "core/tensor.hpp"

namespace tg::cam {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
Vec3 cross(const Vec3& a, const Vec3& b);
Vec3 normalized(const Vec3& a);
double norm(const Vec3& a);
Vec3 matvec(const Mat3& m, const Vec3& v);
Vec3 matvec_t(const Mat3& m, const Vec3& v);  // transpose(m) * v
Mat3 matmul3(const Mat3& a, const Mat3& b);

struct CameraIntrinsics {
  double fx = 4.26, fy = 4.26;
  double cx = 0.5, cy = 0.5;
  void validate() const;  // fx,fy > 0; cx,cy in [0,1]
};

struct CameraPose {
  Mat3 rotation;     // camera-to-world
  Vec3 translation;  // camera position, world units

  void validate() const;  // orthonormal within 1e-6, det +1 within 1e-6
  Vec3 optical_axis() const {  // world direction of the camera z axis
    return {rotation[2], rotation[5], rotation[8]};
  }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

// Camera on a radius-r sphere looking at the origin. yaw rotates about the
// world y axis (yaw 0 puts the camera on +z, the canonical front); pitch
// raises the camera toward +y. |pitch| must stay clear of the poles where
// the up direction degenerates.
CameraPose pose_from_orbit(double yaw, double pitch, double radius);

// One ray per pixel center, row-major v-then-u order; index v*res + u.
std::vector<Ray> generate_rays(const CameraPose& pose,
                               const CameraIntrinsics& intr, int resolution);

// World point at camera-space depth d along the ray through image point
// (u,v) in normalized [0,1] coordinates.
Vec3 unproject(double u, double v, double depth, const CameraPose& pose,
               const CameraIntrinsics& intr);

struct Projection {
  double u, v;   // normalized image coordinates
  double depth;  // camera-space z
};

// nullopt when the point is not strictly in front of the camera
std::optional<Projection> try_project(const Vec3& point,
                                      const CameraPose& pose,
                                      const CameraIntrinsics& intr);
// throwing variant of try_project
Projection project(const Vec3& point, const CameraPose& pose,
                   const CameraIntrinsics& intr);

// Reflection across the world x=0 plane; an orbit pose at yaw maps to the
// orbit pose at -yaw. Involution, preserves orthonormality and det +1.
CameraPose mirror_pose(const CameraPose& pose);

// 25-number pose record: 16 row-major entries of the 4x4 camera-to-world
// matrix followed by 9 row-major entries of the normalized 3x3 intrinsic
// matrix. parse validates structure (homogeneous last row, orthonormal
// rotation, pinhole K pattern) and rejects malformed records.
std::array<double, 25> pose_record(const CameraPose& pose,
                                   const CameraIntrinsics& intr);
std::pair<CameraPose, CameraIntrinsics> parse_pose_record(
    const std::array<double, 25>& rec);

// Pose records of a batch as a [n,25] tensor (conditioning input).
Tensor pose_record_tensor(const std::vector<std::array<double, 25>>& recs);

}  // namespace tg::cam
