#include "mvgaze/gaze_selection.hpp"

#include <cmath>

namespace mvgaze {

GazeLossResult gaze_loss(const GazeVector& g, double sigma, const GazeVector& gt) {
  const double gn = g.norm();
  const double tn = gt.norm();
  if (!(gn > 0.0) || !(tn > 0.0))
    throw Error(ErrorKind::ZeroVector, "gaze loss needs nonzero vectors");
  if (!(sigma > 0.0))
    throw Error(ErrorKind::ParseError, "sigma must be positive");

  const double cos = g.dot(gt) / (gn * tn);
  GazeLossResult out;
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
  out.loss = (1.0 - cos) * inv_2s2 + std::log(sigma);

  // d cos / d g = gt / (|g||gt|) - cos * g / |g|^2
  const Vec3 dcos_dg = gt / (gn * tn) - cos * g / (gn * gn);
  out.d_g = -inv_2s2 * dcos_dg;
  out.d_sigma = -(1.0 - cos) / (sigma * sigma * sigma) + 1.0 / sigma;
  return out;
}

SelectionResult select_and_transfer(const GazePrediction& primary, const GazePrediction& reference,
                                    const Camera& primary_cam, const Camera& reference_cam) {
  SelectionResult out;
  out.g_primary = primary.g;
  out.g_reference = reference.g;
  out.chosen_sigma = std::min(primary.sigma, reference.sigma);
  if (primary.sigma < reference.sigma) {
    out.chosen_view = primary.view_id;
    out.g_reference =
        relative_rotation(reference_cam.extrinsics, primary_cam.extrinsics) * primary.g;
    out.replaced_reference = true;
  } else if (reference.sigma < primary.sigma) {
    out.chosen_view = reference.view_id;
    out.g_primary =
        relative_rotation(primary_cam.extrinsics, reference_cam.extrinsics) * reference.g;
    out.replaced_primary = true;
  } else {
    // Exact tie: both views keep their own prediction.
    out.chosen_view = primary.view_id;
  }
  return out;
}

}  // namespace mvgaze
