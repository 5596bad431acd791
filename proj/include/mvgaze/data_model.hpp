#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvgaze/depth.hpp"
#include "mvgaze/geometry.hpp"

namespace mvgaze {

enum class TargetVisibility { Inside, Outside, Occluded };

const char* to_string(TargetVisibility v);
TargetVisibility target_visibility_from_string(const std::string& s);

/// Occluded targets are still in the frame, so they count as "inside" for
/// the in/out task and as target-present for pair categories.
inline bool target_in_frame(TargetVisibility v) { return v != TargetVisibility::Outside; }

struct HeadBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double center_u() const { return 0.5 * (x0 + x1); }
  double center_v() const { return 0.5 * (y0 + y1); }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Per-image subject annotation. The head box is present only in views where
/// the head was visible; the gaze point is present whenever the target is in
/// the frame (inside or occluded).
struct Annotation {
  std::string image_id;
  std::string camera_id;
  std::string scene_id;
  std::string subject_id;
  bool head_visible = false;
  std::optional<HeadBox> head_box;
  std::optional<Pixel> eye_px;
  std::optional<Pixel> gaze_point;
  TargetVisibility visibility = TargetVisibility::Outside;

  /// Eye pixel with the documented fallback to the head-box center.
  std::optional<Pixel> eye_or_box_center() const;
};

struct Frame {
  int instant = 0;
  std::vector<Annotation> annotations;              // ordered by camera id
  std::map<std::string, std::string> depth_files;  // camera id -> DPTH path
  std::map<std::string, std::string> image_files;  // camera id -> PNG path
};

struct ScenePack {
  std::string scene_id;
  std::vector<Camera> cameras;
  std::vector<Frame> frames;
  std::map<std::string, std::string> ref_depth_files;  // camera id -> static-scene DPTH

  const Camera& camera(const std::string& id) const;
  int camera_index(const std::string& id) const;
};

enum class PairKind { Standard, CrossView };

/// One (primary, reference) input: the unit of training and evaluation.
struct ViewPairSample {
  std::string scene_id;
  int instant = 0;
  Annotation primary;
  Annotation reference;
  PairKind kind = PairKind::Standard;
};

enum class PairCategory { HV_TV, HV_TN, HN_TV, HN_TN };

const char* to_string(PairCategory c);

/// Ordered pair enumeration per instant. Standard mode needs the head
/// visible in the primary view; cross-view mode needs the head visible only
/// in the reference view and the target in the primary frame.
std::vector<ViewPairSample> enumerate_pairs(const ScenePack& pack, PairKind mode);

/// Reference-view head/target visibility category (Table-1 style split).
PairCategory categorize(const ViewPairSample& sample);

/// Binary mask of the head box, resampled to the requested size by nearest
/// neighbor. native_width/height describe the annotation's image.
PixelMask head_mask(const Annotation& ann, int native_width, int native_height, int out_width,
                    int out_height);

// ---- serialization -------------------------------------------------------

std::string camera_to_json(const Camera& cam);
Camera camera_from_json(const std::string& json_text);

std::string manifest_to_json(const ScenePack& pack);
ScenePack manifest_from_json(const std::string& json_text);

void save_manifest(const ScenePack& pack, const std::string& path);
ScenePack load_manifest(const std::string& path);

/// Leave-one-scene-out split over a multi-scene dataset.
std::pair<std::vector<ScenePack>, std::vector<ScenePack>> split_leave_one_scene_out(
    const std::vector<ScenePack>& dataset, const std::string& held_out_scene);

}  // namespace mvgaze
