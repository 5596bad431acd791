#pragma once

#include <cmath>

#include "mvgaze/geometry.hpp"
#include "mvgaze/rng.hpp"

namespace mvgaze::test {

inline Mat3 rot_x(double deg) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rot_y(double deg) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rot_z(double deg) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, Vec3::UnitZ()).toRotationMatrix();
}

inline Mat3 random_rotation(Rng& rng) {
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  return Eigen::AngleAxisd(rng.uniform(0.0, 2.0 * M_PI), axis).toRotationMatrix();
}

inline Camera simple_camera(const std::string& id, double fx, double fy, double cx, double cy,
                            int w, int h, const Mat3& r = Mat3::Identity(),
                            const Vec3& t = Vec3::Zero()) {
  Camera cam;
  cam.id = id;
  cam.intrinsics = Intrinsics{fx, fy, cx, cy, w, h};
  cam.extrinsics.R = r;
  cam.extrinsics.t = t;
  return cam;
}

/// Camera at a world position looking at a point, y-down convention.
inline Camera look_at_camera(const std::string& id, const Vec3& pos, const Vec3& target,
                             double f, int w, int h) {
  const Vec3 z = (target - pos).normalized();
  Vec3 y = (z * z.dot(Vec3::UnitY()) - Vec3::UnitY()).normalized();
  const Vec3 x = y.cross(z).normalized();
  y = z.cross(x);
  Camera cam;
  cam.id = id;
  cam.intrinsics = Intrinsics{f, f, w / 2.0, h / 2.0, w, h};
  cam.extrinsics.R.row(0) = x;
  cam.extrinsics.R.row(1) = y;
  cam.extrinsics.R.row(2) = z;
  cam.extrinsics.t = -cam.extrinsics.R * pos;
  return cam;
}

}  // namespace mvgaze::test
