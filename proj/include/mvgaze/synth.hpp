#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvgaze/data_model.hpp"
#include "mvgaze/depth.hpp"
#include "mvgaze/gaze_field.hpp"
#include "mvgaze/geometry.hpp"
#include "mvgaze/io/png_io.hpp"

namespace mvgaze::synth {

struct SynthConfig {
  uint64_t seed = 0;
  int camera_count = 6;
  int width = 512;
  int height = 384;
  /// Room interior extent in meters; y is up.
  double room_x = 6.0;
  double room_y = 3.0;
  double room_z = 6.0;
  int occluder_count = 2;
  int instants = 1;
  double head_radius = 0.09;
  /// Subject head-center placement, as fractions of the room footprint and
  /// absolute height range in meters.
  double subject_area_lo = 0.3;
  double subject_area_hi = 0.7;
  double subject_height_lo = 1.3;
  double subject_height_hi = 1.7;
  /// Gaze elevation range in degrees (negative looks down).
  double gaze_elevation_lo = -55.0;
  double gaze_elevation_hi = 5.0;
  /// Noise applied to annotations only; ground truth stays exact.
  double pixel_jitter = 0.0;

  void validate() const;
};

/// Axis-aligned box.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct SceneGeometry {
  Box room;  // rays leave through its interior walls
  std::vector<Box> occluders;
};

struct ViewTruth {
  bool head_visible = false;
  TargetVisibility target_vis = TargetVisibility::Outside;
  Vec3 eye_cam = Vec3::Zero();
  Vec3 target_cam = Vec3::Zero();
  Vec3 gaze_cam = Vec3::Zero();  // exact eye-to-target direction, camera frame
  bool eye_projects = false;     // eye in front of the camera
  Pixel eye_px;                  // exact projection when eye_projects
  bool target_projects = false;
  Pixel target_px;
};

struct InstantTruth {
  Vec3 head_center = Vec3::Zero();
  Vec3 eye_world = Vec3::Zero();
  Vec3 target_world = Vec3::Zero();
  std::vector<ViewTruth> views;  // per camera
};

/// A generated scene: the data-model pack, the analytic geometry, exact
/// ground truth, and in-memory depth renders.
struct SynthScene {
  SynthConfig cfg;
  ScenePack pack;  // file path maps are filled by write_scene_files
  SceneGeometry geometry;
  std::vector<InstantTruth> truth;                 // per instant
  std::vector<AbsoluteDepthMap> ref_depth;         // per camera, static scene
  std::vector<std::vector<AbsoluteDepthMap>> depth;  // [instant][camera], with subject
};

/// Deterministic generation; throws InfeasiblePlacement when the bounded
/// placement retries run out.
SynthScene generate(const SynthConfig& cfg);

/// Reference Eq.-6 evaluation straight from the analytic geometry (ray casts
/// instead of the depth-map round trip).
FovHeatmap oracle_fov(const SynthScene& scene, int instant, int camera_index,
                      const DecayConfig& decay = {});

/// Inverse-affine corruption of an absolute depth map, with a fraction of
/// pixels replaced by uniform outliers; returns the planted correction that
/// maps the result back onto the input.
std::pair<DepthMap, ScaleShift> corrupt_depth(const AbsoluteDepthMap& abs, double scale,
                                              double shift, double outlier_fraction,
                                              uint64_t seed);

/// Pixels whose first hit is the subject sphere; the natural RANSAC mask is
/// its complement.
PixelMask subject_mask(const SynthScene& scene, int instant, int camera_index);

/// Simple shaded rendering for the toy neural pipeline.
io::Image8 render_image(const SynthScene& scene, int instant, int camera_index);

/// Writes manifest + DPTH depth files + PNG images + ground-truth JSON under
/// dir, and returns the pack with its file maps filled in.
ScenePack write_scene_files(const SynthScene& scene, const std::string& dir);

}  // namespace mvgaze::synth
