#pragma once

#include <string>
#include <vector>

#include "mvgaze/gaze_field.hpp"
#include "mvgaze/geometry.hpp"

namespace mvgaze {

/// One view's gaze estimate with its aleatoric uncertainty.
struct GazePrediction {
  GazeVector g = GazeVector::Zero();
  double sigma = 1.0;
  std::string view_id;
};

struct SelectionResult {
  GazeVector g_primary = GazeVector::Zero();
  GazeVector g_reference = GazeVector::Zero();
  std::string chosen_view;
  double chosen_sigma = 0.0;
  bool replaced_primary = false;
  bool replaced_reference = false;
};

struct GazeLossResult {
  double loss = 0.0;
  Vec3 d_g = Vec3::Zero();
  double d_sigma = 0.0;
};

/// Uncertainty-weighted cosine angular loss
///   L = (1 - cos(g, gt)) / (2 sigma^2) + log(sigma)
/// with closed-form partials in g and sigma.
GazeLossResult gaze_loss(const GazeVector& g, double sigma, const GazeVector& gt);

/// Keeps the lower-sigma view's gaze and rotates it into the other view's
/// camera frame; equal sigmas leave both views' own predictions in place.
SelectionResult select_and_transfer(const GazePrediction& primary, const GazePrediction& reference,
                                    const Camera& primary_cam, const Camera& reference_cam);

/// One (reference view, downstream output) candidate for multi-pair
/// aggregation around a shared primary view.
template <typename Output>
struct PairCandidate {
  SelectionResult selection;
  int reference_camera_index = 0;
  Output output;
};

/// Picks the candidate whose selected sigma is minimal; ties go to the lowest
/// reference camera index.
template <typename Output>
const PairCandidate<Output>& aggregate_pairs(const std::vector<PairCandidate<Output>>& pairs) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no pairs to aggregate");
  size_t best = 0;
  for (size_t i = 1; i < pairs.size(); ++i) {
    const auto& cand = pairs[i];
    const auto& cur = pairs[best];
    if (cand.selection.chosen_sigma < cur.selection.chosen_sigma ||
        (cand.selection.chosen_sigma == cur.selection.chosen_sigma &&
         cand.reference_camera_index < cur.reference_camera_index)) {
      best = i;
    }
  }
  return pairs[best];
}

}  // namespace mvgaze
