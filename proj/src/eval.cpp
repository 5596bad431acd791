#include "mvgaze/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace mvgaze {

Vec2 decode_heatmap(const FovHeatmap& h) {
  if (h.width <= 0 || h.height <= 0)
    throw Error(ErrorKind::EmptyInput, "cannot decode an empty heatmap");
  int best_u = 0, best_v = 0;
  double best = h.at(0, 0);
  for (int v = 0; v < h.height; ++v) {
    for (int u = 0; u < h.width; ++u) {
      if (h.at(u, v) > best) {
        best = h.at(u, v);
        best_u = u;
        best_v = v;
      }
    }
  }
  return Vec2((best_u + 0.5) / h.width, (best_v + 0.5) / h.height);
}

double normalized_l2(const Vec2& pred, const Vec2& gt) { return (pred - gt).norm(); }

double average_precision(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorKind::ShapeMismatch, "scores/labels size mismatch");
  const int positives = int(std::count(labels.begin(), labels.end(), true));
  const int negatives = int(labels.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw Error(ErrorKind::DegenerateLabels, "AP needs at least one positive and one negative");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  // Ties are grouped; every positive in a group takes the precision at the
  // group boundary, so equal scores cannot smuggle positives ahead of
  // negatives.
  double sum = 0.0;
  int seen = 0, tp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    int group_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) ++group_tp;
      ++j;
    }
    seen += int(j - i);
    tp += group_tp;
    sum += double(group_tp) * double(tp) / double(seen);
    i = j;
  }
  return sum / double(positives);
}

double angular_error_deg(const Vec3& pred, const Vec3& gt) {
  const double pn = pred.norm();
  const double gn = gt.norm();
  if (!(pn > 0.0) || !(gn > 0.0))
    throw Error(ErrorKind::ZeroVector, "angular error needs nonzero vectors");
  const double c = std::clamp(pred.dot(gt) / (pn * gn), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

namespace {

struct ImageAccumulator {
  double dist_sum = 0.0;
  int dist_n = 0;
  double p_in_sum = 0.0;
  int p_in_n = 0;
  bool gt_in = false;
};

CategoryMetrics reduce(const std::map<std::string, ImageAccumulator>& images, int record_count) {
  CategoryMetrics m;
  m.record_count = record_count;
  double dist_total = 0.0;
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& [id, acc] : images) {
    if (acc.dist_n > 0) {
      dist_total += acc.dist_sum / acc.dist_n;
      ++m.dist_count;
    }
    if (acc.p_in_n > 0) {
      scores.push_back(acc.p_in_sum / acc.p_in_n);
      labels.push_back(acc.gt_in);
    }
  }
  if (m.dist_count > 0) m.dist_mean = dist_total / m.dist_count;
  m.ap_count = int(scores.size());
  const bool has_pos = std::find(labels.begin(), labels.end(), true) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), false) != labels.end();
  if (has_pos && has_neg) m.ap = average_precision(scores, labels);
  return m;
}

}  // namespace

MetricsReport aggregate_by_primary(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no eval records");

  std::map<std::string, std::map<std::string, ImageAccumulator>> by_category;
  std::map<std::string, int> category_counts;
  std::map<std::string, ImageAccumulator> all_images;
  double ang_sum = 0.0;
  int ang_n = 0;

  for (const auto& rec : records) {
    const std::string cat = to_string(rec.category);
    auto fill = [&](ImageAccumulator& acc) {
      if (rec.gt_in && rec.gt_point) {
        acc.dist_sum += normalized_l2(rec.predicted_point, *rec.gt_point);
        ++acc.dist_n;
      }
      acc.p_in_sum += rec.p_in;
      ++acc.p_in_n;
      acc.gt_in = rec.gt_in;
    };
    fill(by_category[cat][rec.primary_image_id]);
    fill(all_images[rec.primary_image_id]);
    ++category_counts[cat];
    if (rec.predicted_gaze && rec.gt_gaze) {
      ang_sum += angular_error_deg(*rec.predicted_gaze, *rec.gt_gaze);
      ++ang_n;
    }
  }

  MetricsReport report;
  for (const auto& [cat, images] : by_category)
    report.per_category[cat] = reduce(images, category_counts[cat]);
  report.overall = reduce(all_images, int(records.size()));
  if (ang_n > 0) {
    report.angular_error_mean_deg = ang_sum / ang_n;
    report.angular_error_count = ang_n;
  }
  return report;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "category,metric,value,count\n";
  os.precision(12);
  auto row = [&os](const std::string& cat, const std::string& metric,
                   const std::optional<double>& value, int count) {
    os << cat << "," << metric << ",";
    if (value)
      os << *value;
    else
      os << "nan";
    os << "," << count << "\n";
  };
  for (const auto& [cat, m] : per_category) {
    row(cat, "dist_mean", m.dist_mean, m.dist_count);
    row(cat, "ap", m.ap, m.ap_count);
    row(cat, "records", double(m.record_count), m.record_count);
  }
  row("overall", "dist_mean", overall.dist_mean, overall.dist_count);
  row("overall", "ap", overall.ap, overall.ap_count);
  row("overall", "records", double(overall.record_count), overall.record_count);
  if (angular_error_mean_deg)
    row("overall", "angular_error_mean", angular_error_mean_deg, angular_error_count);
  return os.str();
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  auto metrics_json = [](const CategoryMetrics& m) {
    nlohmann::json o;
    o["dist_mean"] = m.dist_mean ? nlohmann::json(*m.dist_mean) : nlohmann::json(nullptr);
    o["dist_count"] = m.dist_count;
    o["ap"] = m.ap ? nlohmann::json(*m.ap) : nlohmann::json(nullptr);
    o["ap_count"] = m.ap_count;
    o["records"] = m.record_count;
    return o;
  };
  for (const auto& [cat, m] : per_category) j["categories"][cat] = metrics_json(m);
  j["overall"] = metrics_json(overall);
  if (angular_error_mean_deg) {
    j["angular_error_mean_deg"] = *angular_error_mean_deg;
    j["angular_error_count"] = angular_error_count;
  }
  return j.dump(2);
}

}  // namespace mvgaze
