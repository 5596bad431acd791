#pragma once

#include <vector>

#include "mvgaze/depth.hpp"
#include "mvgaze/geometry.hpp"

namespace mvgaze {

/// Gaze direction in a camera frame; direction is what matters, the norm is
/// free.
using GazeVector = Vec3;

/// Subject eye: sub-pixel image location plus its 3D position in the same
/// camera's frame.
struct EyeLocation {
  Pixel px;
  Vec3 p3 = Vec3::Zero();
};

/// Per-pixel gaze prior in [0, 1].
struct FovHeatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  FovHeatmap() = default;
  FovHeatmap(int w, int h) : width(w), height(h), values(size_t(w) * h, 0.0) {}

  double& at(int u, int v) { return values[size_t(v) * width + u]; }
  double at(int u, int v) const { return values[size_t(v) * width + u]; }

  Pixel argmax() const;
};

struct DecayConfig {
  /// Cosines below this keep decaying; at and above they pass through.
  double threshold = 0.9;
  double gamma = 10.0;
};

/// Clamped cosine with the sub-threshold exponential decay applied.
double decayed_cosine(double raw_cosine, const DecayConfig& cfg);

/// 3D vector from the eye to the scene point under pixel px.
GazeVector pixel_to_eye_vector(const PointGrid& cloud, const EyeLocation& eye, const Pixel& px);

/// FoV heatmap over the view's own point cloud: per-pixel clamped cosine
/// between the eye-to-pixel vector and the gaze direction, decayed below the
/// threshold. The eye pixel itself is set to 0.
FovHeatmap fov_heatmap(const PointGrid& cloud, const EyeLocation& eye, const GazeVector& g,
                       const DecayConfig& cfg = {}, int threads = 1);

/// Cross-view variant: the point grid must be metric (scale/shift applied),
/// the eye is a transferred 3D point in the primary frame and may sit outside
/// or behind the primary image.
FovHeatmap fov_heatmap_cross_view(const Camera& primary_cam, const PointGrid& primary_cloud,
                                  const Vec3& eye_in_primary, const GazeVector& g_in_primary,
                                  const DecayConfig& cfg = {}, int threads = 1);

/// Area-average downsample by integer factors; used when feeding scene-sized
/// maps to the neural blocks.
FovHeatmap downsample_area(const FovHeatmap& src, int new_width, int new_height);

}  // namespace mvgaze
