#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvgaze/error.hpp"

namespace mvgaze {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole intrinsics, pixel units, no distortion.
struct Intrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  Mat3 matrix() const;
  void validate() const;

  /// Intrinsics of the same camera resampled to a new image size, keeping
  /// pixel centers aligned (integer-center convention).
  Intrinsics scaled(int new_width, int new_height) const;
};

/// World-to-camera pose: X_cam = R * X_world + t.
struct Extrinsics {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  void validate() const;
  Vec3 camera_center() const { return -R.transpose() * t; }
};

struct Camera {
  Intrinsics intrinsics;
  Extrinsics extrinsics;
  std::string id;

  Vec3 world_to_camera(const Vec3& p_world) const {
    return extrinsics.R * p_world + extrinsics.t;
  }
  Vec3 camera_to_world(const Vec3& p_cam) const {
    return extrinsics.R.transpose() * (p_cam - extrinsics.t);
  }
};

/// Homogeneous image line a*u + b*v + c = 0.
struct EpipolarLine {
  double a = 0.0, b = 0.0, c = 0.0;

  double residual(const Pixel& px) const { return a * px.u + b * px.v + c; }
};

struct Segment {
  Pixel p0, p1;
};

struct TriangulationResult {
  Vec3 point_world = Vec3::Zero();
  double max_reprojection_error_px = 0.0;
};

/// Pinhole projection of a camera-frame point; requires z > 0.
Pixel project(const Camera& cam, const Vec3& p_cam);

/// Back-projection of a pixel at the given depth (camera-frame z), the
/// inverse of project for depth > 0.
Vec3 backproject(const Camera& cam, const Pixel& px, double depth);

/// R_1 * R_2^{-1}: rotates camera-2-frame directions into camera 1.
Mat3 relative_rotation(const Extrinsics& r1, const Extrinsics& r2);

/// Rigid transfer of a point between camera frames.
Vec3 transform_point(const Camera& src, const Camera& dst, const Vec3& p_src);

/// Fundamental matrix mapping view-1 pixels to view-2 epipolar lines,
/// l2 = F * [u1, v1, 1]^T. Throws DegenerateBaseline for coincident centers.
Mat3 fundamental_matrix(const Camera& cam1, const Camera& cam2);

EpipolarLine epipolar_line(const Mat3& F, const Pixel& px);

/// Clips the epipolar line of px (view 1) against view 2's pixel rectangle
/// [0, w) x [0, h). Returns nothing when the line misses the image.
std::optional<Segment> epipolar_segment(const Mat3& F, const Pixel& px, const Intrinsics& view2);

/// n >= 2 uniformly spaced pixels along the segment, endpoints included.
std::vector<Pixel> sample_epipolar(const Segment& seg, int n);

inline constexpr int kEpipolarSampleCount = 48;

/// Two-view triangulation: linear DLT seed, refined by the midpoint of
/// closest approach between the viewing rays. Throws NearParallelRays when
/// the rays subtend less than 0.1 degrees.
TriangulationResult triangulate(const Camera& cam1, const Pixel& px1, const Camera& cam2,
                                const Pixel& px2);

}  // namespace mvgaze
