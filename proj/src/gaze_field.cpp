#include "mvgaze/gaze_field.hpp"

#include <cmath>

#include "mvgaze/parallel.hpp"

namespace mvgaze {

Pixel FovHeatmap::argmax() const {
  int best = 0;
  for (int i = 1; i < int(values.size()); ++i)
    if (values[size_t(i)] > values[size_t(best)]) best = i;
  return Pixel{double(best % width), double(best / width)};
}

double decayed_cosine(double raw_cosine, const DecayConfig& cfg) {
  const double raw = std::max(0.0, raw_cosine);
  if (raw < cfg.threshold) return raw * std::exp(-cfg.gamma * (cfg.threshold - raw));
  return raw;
}

GazeVector pixel_to_eye_vector(const PointGrid& cloud, const EyeLocation& eye, const Pixel& px) {
  const int u = int(std::lround(px.u));
  const int v = int(std::lround(px.v));
  if (u < 0 || u >= cloud.width || v < 0 || v >= cloud.height)
    throw Error(ErrorKind::OutOfBounds, "pixel outside point grid");
  if (u == int(std::lround(eye.px.u)) && v == int(std::lround(eye.px.v)))
    throw Error(ErrorKind::DegenerateAtEye, "eye-to-eye vector is undefined");
  return cloud.at(u, v) - eye.p3;
}

namespace {

FovHeatmap cosine_field(const PointGrid& cloud, const Vec3& eye3, const GazeVector& g,
                        const DecayConfig& cfg, int threads) {
  if (!(g.norm() > 0.0))
    throw Error(ErrorKind::ZeroVector, "gaze vector must be nonzero");
  FovHeatmap hm(cloud.width, cloud.height);
  const double g_norm = g.norm();
  parallel_for(size_t(cloud.height), threads, [&](size_t row) {
    const int v = int(row);
    for (int u = 0; u < cloud.width; ++u) {
      const Vec3 d = cloud.at(u, v) - eye3;
      const double n = d.norm();
      if (n == 0.0) {
        hm.at(u, v) = 0.0;
        continue;
      }
      hm.at(u, v) = decayed_cosine(d.dot(g) / (n * g_norm), cfg);
    }
  });
  return hm;
}

void zero_eye_pixel(FovHeatmap& hm, const Pixel& eye_px) {
  const int u = int(std::lround(eye_px.u));
  const int v = int(std::lround(eye_px.v));
  if (u >= 0 && u < hm.width && v >= 0 && v < hm.height) hm.at(u, v) = 0.0;
}

}  // namespace

FovHeatmap fov_heatmap(const PointGrid& cloud, const EyeLocation& eye, const GazeVector& g,
                       const DecayConfig& cfg, int threads) {
  FovHeatmap hm = cosine_field(cloud, eye.p3, g, cfg, threads);
  zero_eye_pixel(hm, eye.px);
  return hm;
}

FovHeatmap fov_heatmap_cross_view(const Camera& primary_cam, const PointGrid& primary_cloud,
                                  const Vec3& eye_in_primary, const GazeVector& g_in_primary,
                                  const DecayConfig& cfg, int threads) {
  FovHeatmap hm = cosine_field(primary_cloud, eye_in_primary, g_in_primary, cfg, threads);
  if (eye_in_primary.z() > 0.0) {
    // When the transferred eye lands inside the primary image, it is treated
    // exactly like a native eye pixel.
    const Pixel px = project(primary_cam, eye_in_primary);
    zero_eye_pixel(hm, px);
  }
  return hm;
}

FovHeatmap downsample_area(const FovHeatmap& src, int new_width, int new_height) {
  if (new_width <= 0 || new_height <= 0 || src.width % new_width != 0 ||
      src.height % new_height != 0)
    throw Error(ErrorKind::ShapeMismatch, "area downsample needs integer factors");
  const int fx = src.width / new_width;
  const int fy = src.height / new_height;
  FovHeatmap out(new_width, new_height);
  for (int v = 0; v < new_height; ++v) {
    for (int u = 0; u < new_width; ++u) {
      double sum = 0.0;
      for (int dy = 0; dy < fy; ++dy)
        for (int dx = 0; dx < fx; ++dx) sum += src.at(u * fx + dx, v * fy + dy);
      out.at(u, v) = sum / double(fx * fy);
    }
  }
  return out;
}

}  // namespace mvgaze
