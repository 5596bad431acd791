#pragma once

#include <cstdint>
#include <vector>

#include "mvgaze/geometry.hpp"

namespace mvgaze {

/// Dense per-pixel depth, row-major. Values are positive; the scale may be
/// relative (monocular) or metric depending on provenance.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int w, int h, double fill = 1.0) : width(w), height(h), values(size_t(w) * h, fill) {}

  double& at(int u, int v) { return values[size_t(v) * width + u]; }
  double at(int u, int v) const { return values[size_t(v) * width + u]; }
  size_t size() const { return values.size(); }

  void validate_positive() const;
};

/// Depth in meters; same container, stronger meaning.
using AbsoluteDepthMap = DepthMap;

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> values;

  PixelMask() = default;
  PixelMask(int w, int h, bool fill = true)
      : width(w), height(h), values(size_t(w) * h, fill ? 1 : 0) {}

  bool at(int u, int v) const { return values[size_t(v) * width + u] != 0; }
  void set(int u, int v, bool b) { values[size_t(v) * width + u] = b ? 1 : 0; }
  size_t count() const;
};

/// Affine depth correction D* = a * D + b.
struct ScaleShift {
  double a = 1.0;
  double b = 0.0;
  int inlier_count = 0;
  double inlier_rms = 0.0;
};

struct RansacConfig {
  int iterations = 500;
  /// Inlier threshold as a fraction of the median unmasked reference depth.
  double threshold_frac_of_median = 0.02;
  double min_inlier_ratio = 0.3;
  int min_inlier_pixels = 100;
  uint64_t seed = 0;
};

struct PointGrid {
  int width = 0;
  int height = 0;
  std::vector<Vec3> points;

  const Vec3& at(int u, int v) const { return points[size_t(v) * width + u]; }
  Vec3& at(int u, int v) { return points[size_t(v) * width + u]; }
};

/// Per-pixel back-projection of a depth map into the camera frame. Relative
/// depth yields a pseudo point cloud: directions are right, scale is not.
PointGrid pseudo_pointcloud(const Camera& cam, const DepthMap& d);

/// Robust affine fit of relative depth onto absolute reference depth over the
/// unmasked pixels; deterministic for a fixed cfg.seed.
ScaleShift ransac_scale_shift(const DepthMap& rel, const AbsoluteDepthMap& abs_ref,
                              const PixelMask& mask, const RansacConfig& cfg);

/// Elementwise a * rel + b; throws NonPositiveResult if any corrected depth
/// comes out non-positive.
AbsoluteDepthMap apply_scale_shift(const DepthMap& rel, const ScaleShift& s);

}  // namespace mvgaze
