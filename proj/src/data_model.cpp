#include "mvgaze/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mvgaze {

using nlohmann::json;

const char* to_string(TargetVisibility v) {
  switch (v) {
    case TargetVisibility::Inside: return "inside";
    case TargetVisibility::Outside: return "outside";
    case TargetVisibility::Occluded: return "occluded";
  }
  return "outside";
}

TargetVisibility target_visibility_from_string(const std::string& s) {
  if (s == "inside") return TargetVisibility::Inside;
  if (s == "outside") return TargetVisibility::Outside;
  if (s == "occluded") return TargetVisibility::Occluded;
  throw Error(ErrorKind::ParseError, "unknown visibility label: " + s);
}

const char* to_string(PairCategory c) {
  switch (c) {
    case PairCategory::HV_TV: return "HV-TV";
    case PairCategory::HV_TN: return "HV-TN";
    case PairCategory::HN_TV: return "HN-TV";
    case PairCategory::HN_TN: return "HN-TN";
  }
  return "HN-TN";
}

std::optional<Pixel> Annotation::eye_or_box_center() const {
  if (eye_px) return eye_px;
  if (head_box) return Pixel{head_box->center_u(), head_box->center_v()};
  return std::nullopt;
}

const Camera& ScenePack::camera(const std::string& id) const {
  for (const auto& cam : cameras)
    if (cam.id == id) return cam;
  throw Error(ErrorKind::UnknownScene, "no camera with id " + id);
}

int ScenePack::camera_index(const std::string& id) const {
  for (size_t i = 0; i < cameras.size(); ++i)
    if (cameras[i].id == id) return int(i);
  throw Error(ErrorKind::UnknownScene, "no camera with id " + id);
}

std::vector<ViewPairSample> enumerate_pairs(const ScenePack& pack, PairKind mode) {
  std::vector<ViewPairSample> out;
  for (const Frame& frame : pack.frames) {
    // Index annotations by camera order for a deterministic sweep.
    std::vector<const Annotation*> by_cam(pack.cameras.size(), nullptr);
    for (const Annotation& ann : frame.annotations) {
      const int idx = pack.camera_index(ann.camera_id);
      by_cam[size_t(idx)] = &ann;
    }
    for (size_t p = 0; p < by_cam.size(); ++p) {
      for (size_t r = 0; r < by_cam.size(); ++r) {
        if (p == r || by_cam[p] == nullptr || by_cam[r] == nullptr) continue;
        const Annotation& prim = *by_cam[p];
        const Annotation& ref = *by_cam[r];
        bool keep = false;
        if (mode == PairKind::Standard) {
          keep = prim.head_visible;
        } else {
          keep = !prim.head_visible && ref.head_visible && target_in_frame(prim.visibility);
        }
        if (!keep) continue;
        ViewPairSample sample;
        sample.scene_id = pack.scene_id;
        sample.instant = frame.instant;
        sample.primary = prim;
        sample.reference = ref;
        sample.kind = mode;
        out.push_back(std::move(sample));
      }
    }
  }
  return out;
}

PairCategory categorize(const ViewPairSample& sample) {
  const bool head = sample.reference.head_visible;
  const bool target = target_in_frame(sample.reference.visibility);
  if (head) return target ? PairCategory::HV_TV : PairCategory::HV_TN;
  return target ? PairCategory::HN_TV : PairCategory::HN_TN;
}

PixelMask head_mask(const Annotation& ann, int native_width, int native_height, int out_width,
                    int out_height) {
  if (!ann.head_box) throw Error(ErrorKind::BoxOutOfImage, "annotation has no head box");
  const HeadBox& box = *ann.head_box;
  if (!(box.x0 < box.x1) || !(box.y0 < box.y1))
    throw Error(ErrorKind::BoxOutOfImage, "degenerate head box");
  if (box.x0 < 0.0 || box.y0 < 0.0 || box.x1 > native_width || box.y1 > native_height)
    throw Error(ErrorKind::BoxOutOfImage, "head box outside image");

  PixelMask native(native_width, native_height, false);
  for (int v = 0; v < native_height; ++v) {
    const double cy = v + 0.5;
    if (cy < box.y0 || cy >= box.y1) continue;
    for (int u = 0; u < native_width; ++u) {
      const double cx = u + 0.5;
      if (cx >= box.x0 && cx < box.x1) native.set(u, v, true);
    }
  }
  if (out_width == native_width && out_height == native_height) return native;

  PixelMask out(out_width, out_height, false);
  for (int v = 0; v < out_height; ++v) {
    const int sv = std::min(native_height - 1, int((v + 0.5) * native_height / out_height));
    for (int u = 0; u < out_width; ++u) {
      const int su = std::min(native_width - 1, int((u + 0.5) * native_width / out_width));
      out.set(u, v, native.at(su, sv));
    }
  }
  return out;
}

// ---- serialization -------------------------------------------------------

namespace {

json camera_to_json_obj(const Camera& cam) {
  json j;
  j["id"] = cam.id;
  j["fx"] = cam.intrinsics.fx;
  j["fy"] = cam.intrinsics.fy;
  j["cx"] = cam.intrinsics.cx;
  j["cy"] = cam.intrinsics.cy;
  j["width"] = cam.intrinsics.width;
  j["height"] = cam.intrinsics.height;
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r[size_t(i * 3 + k)] = cam.extrinsics.R(i, k);
  j["R"] = r;
  j["t"] = {cam.extrinsics.t.x(), cam.extrinsics.t.y(), cam.extrinsics.t.z()};
  return j;
}

Camera camera_from_json_obj(const json& j) {
  Camera cam;
  cam.id = j.at("id").get<std::string>();
  cam.intrinsics.fx = j.at("fx").get<double>();
  cam.intrinsics.fy = j.at("fy").get<double>();
  cam.intrinsics.cx = j.at("cx").get<double>();
  cam.intrinsics.cy = j.at("cy").get<double>();
  cam.intrinsics.width = j.at("width").get<int>();
  cam.intrinsics.height = j.at("height").get<int>();
  const auto r = j.at("R").get<std::vector<double>>();
  if (r.size() != 9) throw Error(ErrorKind::ParseError, "camera R needs 9 numbers");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) cam.extrinsics.R(i, k) = r[size_t(i * 3 + k)];
  const auto t = j.at("t").get<std::vector<double>>();
  if (t.size() != 3) throw Error(ErrorKind::ParseError, "camera t needs 3 numbers");
  cam.extrinsics.t = Vec3(t[0], t[1], t[2]);
  cam.intrinsics.validate();
  cam.extrinsics.validate();
  return cam;
}

json pixel_to_json(const Pixel& px) { return json::array({px.u, px.v}); }

Pixel pixel_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::ParseError, "pixel needs 2 numbers");
  return Pixel{j[0].get<double>(), j[1].get<double>()};
}

json annotation_to_json(const Annotation& ann) {
  json j;
  j["image_id"] = ann.image_id;
  j["camera_id"] = ann.camera_id;
  j["scene_id"] = ann.scene_id;
  j["subject_id"] = ann.subject_id;
  j["head_visible"] = ann.head_visible;
  if (ann.head_box)
    j["head_box"] = {ann.head_box->x0, ann.head_box->y0, ann.head_box->x1, ann.head_box->y1};
  if (ann.eye_px) j["eye_px"] = pixel_to_json(*ann.eye_px);
  if (ann.gaze_point) j["gaze_point"] = pixel_to_json(*ann.gaze_point);
  j["visibility"] = to_string(ann.visibility);
  return j;
}

Annotation annotation_from_json(const json& j) {
  Annotation ann;
  ann.image_id = j.at("image_id").get<std::string>();
  ann.camera_id = j.at("camera_id").get<std::string>();
  ann.scene_id = j.at("scene_id").get<std::string>();
  ann.subject_id = j.at("subject_id").get<std::string>();
  ann.head_visible = j.at("head_visible").get<bool>();
  if (j.contains("head_box")) {
    const auto b = j.at("head_box").get<std::vector<double>>();
    if (b.size() != 4) throw Error(ErrorKind::ParseError, "head_box needs 4 numbers");
    ann.head_box = HeadBox{b[0], b[1], b[2], b[3]};
  }
  if (j.contains("eye_px")) ann.eye_px = pixel_from_json(j.at("eye_px"));
  if (j.contains("gaze_point")) ann.gaze_point = pixel_from_json(j.at("gaze_point"));
  ann.visibility = target_visibility_from_string(j.at("visibility").get<std::string>());
  if (target_in_frame(ann.visibility) != ann.gaze_point.has_value())
    throw Error(ErrorKind::ParseError,
                "gaze_point must be present exactly when the target is in frame");
  return ann;
}

}  // namespace

std::string camera_to_json(const Camera& cam) { return camera_to_json_obj(cam).dump(2); }

Camera camera_from_json(const std::string& json_text) {
  return camera_from_json_obj(json::parse(json_text));
}

std::string manifest_to_json(const ScenePack& pack) {
  json j;
  j["scene_id"] = pack.scene_id;
  j["cameras"] = json::array();
  for (const auto& cam : pack.cameras) j["cameras"].push_back(camera_to_json_obj(cam));
  if (!pack.ref_depth_files.empty()) j["ref_depth_files"] = pack.ref_depth_files;
  j["frames"] = json::array();
  for (const auto& frame : pack.frames) {
    json f;
    f["instant"] = frame.instant;
    f["annotations"] = json::array();
    for (const auto& ann : frame.annotations) f["annotations"].push_back(annotation_to_json(ann));
    f["depth_files"] = frame.depth_files;
    if (!frame.image_files.empty()) f["image_files"] = frame.image_files;
    j["frames"].push_back(std::move(f));
  }
  return j.dump(2);
}

ScenePack manifest_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ScenePack pack;
  pack.scene_id = j.at("scene_id").get<std::string>();
  for (const auto& c : j.at("cameras")) pack.cameras.push_back(camera_from_json_obj(c));
  if (j.contains("ref_depth_files"))
    pack.ref_depth_files = j.at("ref_depth_files").get<std::map<std::string, std::string>>();
  for (const auto& f : j.at("frames")) {
    Frame frame;
    frame.instant = f.at("instant").get<int>();
    for (const auto& a : f.at("annotations")) {
      Annotation ann = annotation_from_json(a);
      pack.camera(ann.camera_id);  // every annotation's camera must exist
      frame.annotations.push_back(std::move(ann));
    }
    if (f.contains("depth_files"))
      frame.depth_files = f.at("depth_files").get<std::map<std::string, std::string>>();
    if (f.contains("image_files"))
      frame.image_files = f.at("image_files").get<std::map<std::string, std::string>>();
    pack.frames.push_back(std::move(frame));
  }
  return pack;
}

void save_manifest(const ScenePack& pack, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + path);
  os << manifest_to_json(pack) << "\n";
}

ScenePack load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return manifest_from_json(ss.str());
}

std::pair<std::vector<ScenePack>, std::vector<ScenePack>> split_leave_one_scene_out(
    const std::vector<ScenePack>& dataset, const std::string& held_out_scene) {
  std::vector<ScenePack> train, eval;
  bool found = false;
  for (const auto& pack : dataset) {
    if (pack.scene_id == held_out_scene) {
      eval.push_back(pack);
      found = true;
    } else {
      train.push_back(pack);
    }
  }
  if (!found) throw Error(ErrorKind::UnknownScene, "scene not in dataset: " + held_out_scene);
  return {std::move(train), std::move(eval)};
}

}  // namespace mvgaze
