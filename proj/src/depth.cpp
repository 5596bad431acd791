#include "mvgaze/depth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvgaze/rng.hpp"

namespace mvgaze {

void DepthMap::validate_positive() const {
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::NonPositiveDepth, "depth map contains non-positive values");
  }
}

size_t PixelMask::count() const {
  return size_t(std::count_if(values.begin(), values.end(), [](uint8_t b) { return b != 0; }));
}

PointGrid pseudo_pointcloud(const Camera& cam, const DepthMap& d) {
  if (d.width != cam.intrinsics.width || d.height != cam.intrinsics.height)
    throw Error(ErrorKind::ShapeMismatch, "depth map does not match camera image size");
  PointGrid grid;
  grid.width = d.width;
  grid.height = d.height;
  grid.points.resize(d.size());
  const Intrinsics& in = cam.intrinsics;
  for (int v = 0; v < d.height; ++v) {
    for (int u = 0; u < d.width; ++u) {
      const double depth = d.at(u, v);
      grid.at(u, v) =
          Vec3((u - in.cx) / in.fx * depth, (v - in.cy) / in.fy * depth, depth);
    }
  }
  return grid;
}

namespace {

struct FitSample {
  double rel;
  double abs;
};

/// Least-squares line through (rel, abs) pairs.
bool least_squares_fit(const std::vector<FitSample>& pts, double& a, double& b) {
  const double n = double(pts.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sx += p.rel;
    sy += p.abs;
    sxx += p.rel * p.rel;
    sxy += p.rel * p.abs;
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-15 * std::max(1.0, n * sxx)) return false;
  a = (n * sxy - sx * sy) / denom;
  b = (sy - a * sx) / n;
  return true;
}

}  // namespace

ScaleShift ransac_scale_shift(const DepthMap& rel, const AbsoluteDepthMap& abs_ref,
                              const PixelMask& mask, const RansacConfig& cfg) {
  if (rel.width != abs_ref.width || rel.height != abs_ref.height ||
      rel.width != mask.width || rel.height != mask.height)
    throw Error(ErrorKind::ShapeMismatch, "ransac inputs differ in shape");

  std::vector<size_t> idx;
  idx.reserve(rel.size());
  for (size_t i = 0; i < rel.size(); ++i)
    if (mask.values[i] != 0) idx.push_back(i);
  if (int(idx.size()) < cfg.min_inlier_pixels)
    throw Error(ErrorKind::TooFewPixels, "not enough unmasked pixels for alignment");

  std::vector<double> ref_vals;
  ref_vals.reserve(idx.size());
  for (size_t i : idx) ref_vals.push_back(abs_ref.values[i]);
  std::nth_element(ref_vals.begin(), ref_vals.begin() + ref_vals.size() / 2, ref_vals.end());
  const double median_ref = ref_vals[ref_vals.size() / 2];
  const double threshold = cfg.threshold_frac_of_median * median_ref;

  Rng rng(cfg.seed);
  int best_count = -1;
  double best_a = 1.0, best_b = 0.0;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const size_t i1 = idx[rng.uniform_index(idx.size())];
    const size_t i2 = idx[rng.uniform_index(idx.size())];
    const double x1 = rel.values[i1], y1 = abs_ref.values[i1];
    const double x2 = rel.values[i2], y2 = abs_ref.values[i2];
    if (std::abs(x2 - x1) < 1e-12) continue;
    const double a = (y2 - y1) / (x2 - x1);
    if (!(a > 0.0)) continue;
    const double b = y1 - a * x1;
    int count = 0;
    for (size_t i : idx) {
      if (std::abs(a * rel.values[i] + b - abs_ref.values[i]) < threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_a = a;
      best_b = b;
    }
  }

  if (best_count < 0 || double(best_count) / double(idx.size()) < cfg.min_inlier_ratio)
    throw Error(ErrorKind::NoConsensus, "best hypothesis below minimum inlier ratio");

  // Refit on the consensus set, then report inliers of the refined fit.
  std::vector<FitSample> inliers;
  inliers.reserve(size_t(best_count));
  for (size_t i : idx) {
    if (std::abs(best_a * rel.values[i] + best_b - abs_ref.values[i]) < threshold)
      inliers.push_back({rel.values[i], abs_ref.values[i]});
  }
  double a = best_a, b = best_b;
  least_squares_fit(inliers, a, b);
  if (!(a > 0.0)) {
    a = best_a;
    b = best_b;
  }

  ScaleShift result;
  result.a = a;
  result.b = b;
  double sq = 0.0;
  int count = 0;
  for (size_t i : idx) {
    const double r = a * rel.values[i] + b - abs_ref.values[i];
    if (std::abs(r) < threshold) {
      sq += r * r;
      ++count;
    }
  }
  result.inlier_count = count;
  result.inlier_rms = count > 0 ? std::sqrt(sq / count) : 0.0;
  return result;
}

AbsoluteDepthMap apply_scale_shift(const DepthMap& rel, const ScaleShift& s) {
  AbsoluteDepthMap out;
  out.width = rel.width;
  out.height = rel.height;
  out.values.resize(rel.size());
  for (size_t i = 0; i < rel.size(); ++i) {
    const double d = s.a * rel.values[i] + s.b;
    if (!(d > 0.0))
      throw Error(ErrorKind::NonPositiveResult, "corrected depth is non-positive");
    out.values[i] = d;
  }
  return out;
}

}  // namespace mvgaze
