#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvgaze/data_model.hpp"
#include "mvgaze/gaze_field.hpp"

namespace mvgaze {

/// One prediction/ground-truth pairing for a (primary image, reference
/// camera) sample. Coordinates are normalized to the unit square.
struct EvalRecord {
  std::string primary_image_id;
  std::string reference_camera_id;
  Vec2 predicted_point = Vec2::Zero();
  std::optional<Vec2> gt_point;  // absent when the target is out of frame
  double p_in = 0.0;
  bool gt_in = false;
  PairCategory category = PairCategory::HV_TV;
  std::optional<Vec3> predicted_gaze;
  std::optional<Vec3> gt_gaze;
};

struct CategoryMetrics {
  std::optional<double> dist_mean;
  int dist_count = 0;  // primary images contributing distances
  std::optional<double> ap;
  int ap_count = 0;  // primary images contributing to AP
  int record_count = 0;
};

struct MetricsReport {
  std::map<std::string, CategoryMetrics> per_category;  // keyed by category name
  CategoryMetrics overall;
  std::optional<double> angular_error_mean_deg;
  int angular_error_count = 0;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Argmax cell center of a 64x64 (or any) heatmap in unit-square
/// coordinates; ties resolve to the first cell in row-major order.
Vec2 decode_heatmap(const FovHeatmap& h);

double normalized_l2(const Vec2& pred, const Vec2& gt);

/// Average precision over a ranked score list: mean over positives of the
/// precision at each positive's tie-group boundary.
double average_precision(const std::vector<double>& scores, const std::vector<bool>& labels);

/// Angle between two gaze vectors in degrees, clamped to [0, 180].
double angular_error_deg(const Vec3& pred, const Vec3& gt);

/// Two-level averaging: scores are first averaged per primary image, then
/// across images, per category and overall.
MetricsReport aggregate_by_primary(const std::vector<EvalRecord>& records);

}  // namespace mvgaze
