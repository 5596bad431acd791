#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvgaze/data_model.hpp"
#include "mvgaze/eval.hpp"
#include "mvgaze/gaze_selection.hpp"
#include "mvgaze/io/png_io.hpp"
#include "mvgaze/nn/checkpoint.hpp"
#include "mvgaze/nn/model.hpp"

namespace mvgaze::pipeline {

/// A manifest plus the directory its relative file paths resolve against.
struct LoadedScene {
  ScenePack pack;
  std::string dir;
};

LoadedScene load_scene(const std::string& manifest_path);
std::string resolve_path(const std::string& dir, const std::string& rel);

/// Output of the Supp.-S4 style absolute-depth transfer chain.
struct CrossViewChain {
  ScaleShift fit_primary;
  ScaleShift fit_reference;
  Vec3 eye_reference_abs = Vec3::Zero();  // metric eye in the reference frame
  Vec3 eye_primary_abs = Vec3::Zero();    // transferred into the primary frame
  GazeVector gaze_primary = GazeVector::Zero();
  FovHeatmap fov;  // primary view, scene resolution
};

/// Full cross-view prerequisite chain: RANSAC-align both views' relative
/// depth to the static reference depth, lift the reference eye to metric 3D,
/// transfer it into the primary frame, rotate the gaze, and evaluate the
/// FoV prior over the primary's metric cloud.
CrossViewChain cross_view_fov(const Camera& cam_primary, const DepthMap& depth_primary,
                              const AbsoluteDepthMap& ref_primary, const PixelMask& mask_primary,
                              const Camera& cam_reference, const DepthMap& depth_reference,
                              const AbsoluteDepthMap& ref_reference,
                              const PixelMask& mask_reference, const Pixel& eye_px_reference,
                              const GazeVector& gaze_reference, const RansacConfig& ransac_cfg,
                              const DecayConfig& decay = {}, int threads = 1);

/// Mask that hides the subject region: the head box inflated by the given
/// factor, following the person-box masking idea.
PixelMask subject_exclusion_mask(const Annotation& ann, int width, int height,
                                 double inflate = 2.0);

// ---- prepared samples ----------------------------------------------------

struct PreparedView {
  Camera cam;
  Annotation ann;
  DepthMap depth;  // input (relative-style) depth at scene resolution
  nn::Tensor scene_base;  // [5, H, W]; FoV channel is rewritten per forward
  nn::Tensor head_crop;   // [3, hc, hc]
  bool head_present = false;
  Vec2 head_center_norm = Vec2(0.5, 0.5);
  std::optional<EyeLocation> eye;
  std::optional<GazeVector> gt_gaze;  // pseudo GT from the view's own cloud
  bool gt_in = false;
  std::optional<Pixel> gt_heatmap_px;  // target in heatmap coordinates
  std::optional<Vec2> gt_point_norm;
};

struct PreparedPair {
  std::shared_ptr<const PreparedView> view[2];  // 0 = primary, 1 = reference
  Mat3 r21 = Mat3::Identity();
  Mat3 r12 = Mat3::Identity();
  const nn::EsaGeometry* esa_12 = nullptr;
  const nn::EsaGeometry* esa_21 = nullptr;
  nn::ForwardMode mode = nn::ForwardMode::Standard;
  std::string primary_image_id;
  std::string reference_camera_id;
  // Cross-view extras (absolute-depth route), absent in standard mode.
  std::optional<Vec3> eye_primary_abs;
  std::optional<DepthMap> abs_depth_primary;
};

/// Caches ESA geometries per ordered camera pair; owns the storage referenced
/// by PreparedPair.
class EsaGeometryCache {
 public:
  const nn::EsaGeometry* get(const Camera& from, const Camera& to, int grid_w, int grid_h,
                             int samples);

 private:
  std::map<std::string, nn::EsaGeometry> cache_;
};

struct DatasetOptions {
  nn::ModelConfig model;
  PairKind pair_mode = PairKind::Standard;
  int max_pairs = 0;  // 0 keeps all
  uint64_t ransac_seed = 1;
  RansacConfig ransac;
};

/// Builds network-ready pairs from scene manifests (reads depth/image files).
std::vector<PreparedPair> prepare_pairs(const std::vector<LoadedScene>& scenes,
                                        const DatasetOptions& opts, EsaGeometryCache& esa_cache);

// ---- forward / training ----------------------------------------------------

struct PairEvaluation {
  GazePrediction pred[2];
  SelectionResult selection;
  nn::ModelOutputs outputs[2];
  bool decoded[2] = {false, false};
  double loss = 0.0;
};

/// Forward-only pass: gaze phase, UGS + FoV priors, scene phase, losses.
PairEvaluation evaluate_pair(nn::ToyModel& model, const PreparedPair& pair, int threads = 1);

/// Forward + backward, accumulating parameter gradients scaled by
/// loss_scale; returns the same evaluation record.
PairEvaluation train_pair(nn::ToyModel& model, const PreparedPair& pair, double loss_scale,
                          int threads = 1);

struct TrainConfig {
  int steps = 200;
  int batch = 16;
  double lr = 0.05;
  uint64_t seed = 0;
  int threads = 1;
};

struct TrainResult {
  std::vector<double> step_loss;  // mini-batch loss per step
  double full_loss_after_step1 = 0.0;
  double full_loss_final = 0.0;
};

/// Plain fixed-step gradient descent over the prepared pairs; deterministic
/// for a fixed seed.
TrainResult train_toy(nn::ToyModel& model, const std::vector<PreparedPair>& pairs,
                      const TrainConfig& cfg);

double dataset_loss(nn::ToyModel& model, const std::vector<PreparedPair>& pairs, int threads = 1);

}  // namespace mvgaze::pipeline
