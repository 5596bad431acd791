#include "mvgaze/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mvgaze/rng.hpp"

namespace mvgaze::synth {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  if (camera_count < 2) throw Error(ErrorKind::ParseError, "camera_count must be >= 2");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::ParseError, "image size must be positive");
  if (!(room_x > 0.0 && room_y > 0.0 && room_z > 0.0))
    throw Error(ErrorKind::ParseError, "room extents must be positive");
  if (instants < 1) throw Error(ErrorKind::ParseError, "instants must be >= 1");
  if (!(head_radius > 0.0)) throw Error(ErrorKind::ParseError, "head radius must be positive");
  if (occluder_count < 0) throw Error(ErrorKind::ParseError, "occluder_count must be >= 0");
}

namespace {

constexpr int kPrimRoom = 0;
constexpr int kPrimOccluderBase = 1;  // occluder i -> kPrimOccluderBase + i
constexpr int kPrimSphere = 1 << 20;
constexpr int kPrimNone = -1;

struct Hit {
  double s = std::numeric_limits<double>::infinity();
  int prim = kPrimNone;
};

/// Entry/exit parameters of a ray against an AABB; false when it misses.
bool slab_range(const Box& box, const Vec3& o, const Vec3& d, double& t0, double& t1) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < box.lo[k] || o[k] > box.hi[k]) return false;
      continue;
    }
    double a = (box.lo[k] - o[k]) / d[k];
    double b = (box.hi[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  return true;
}

double sphere_entry(const Vec3& center, double radius, const Vec3& o, const Vec3& d) {
  const Vec3 oc = o - center;
  const double a = d.dot(d);
  const double b = 2.0 * d.dot(oc);
  const double c = oc.dot(oc) - radius * radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc);
  const double s0 = (-b - sq) / (2.0 * a);
  const double s1 = (-b + sq) / (2.0 * a);
  if (s0 > 1e-9) return s0;
  if (s1 > 1e-9) return s1;
  return std::numeric_limits<double>::infinity();
}

struct Subject {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// First surface along o + s*d: occluder entries, sphere entry, else the room
/// exit wall. The room is closed, so an inside ray always hits something.
Hit first_hit(const SceneGeometry& geom, const Subject* subject, const Vec3& o, const Vec3& d) {
  Hit hit;
  double t0, t1;
  if (slab_range(geom.room, o, d, t0, t1) && t1 > 1e-9) {
    hit.s = t1;
    hit.prim = kPrimRoom;
  }
  for (size_t i = 0; i < geom.occluders.size(); ++i) {
    if (!slab_range(geom.occluders[i], o, d, t0, t1)) continue;
    if (t1 < 1e-9) continue;
    const double s = t0 > 1e-9 ? t0 : t1;
    if (s < hit.s) {
      hit.s = s;
      hit.prim = kPrimOccluderBase + int(i);
    }
  }
  if (subject) {
    const double s = sphere_entry(subject->center, subject->radius, o, d);
    if (s < hit.s) {
      hit.s = s;
      hit.prim = kPrimSphere;
    }
  }
  return hit;
}

/// True when something blocks the open segment from a to b (margin meters
/// before b).
bool segment_blocked(const SceneGeometry& geom, const Subject* subject, const Vec3& a,
                     const Vec3& b, double margin = 1e-6) {
  const Vec3 d = b - a;
  const double len = d.norm();
  Hit h;
  double t0, t1;
  for (size_t i = 0; i < geom.occluders.size(); ++i) {
    if (!slab_range(geom.occluders[i], a, d, t0, t1)) continue;
    const double s = t0 > 1e-9 ? t0 : t1;
    if (s > 1e-9 && s * len < len - margin) return true;
  }
  if (subject) {
    const double s = sphere_entry(subject->center, subject->radius, a, d);
    if (s * len < len - margin) return true;
  }
  return false;
}

AbsoluteDepthMap render_depth(const SceneGeometry& geom, const Subject* subject,
                              const Camera& cam) {
  const Intrinsics& in = cam.intrinsics;
  AbsoluteDepthMap d(in.width, in.height);
  const Mat3 r_t = cam.extrinsics.R.transpose();
  const Vec3 center = cam.extrinsics.camera_center();
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      // dir has z = 1 in the camera frame, so the ray parameter is z-depth.
      const Vec3 dir_cam((u - in.cx) / in.fx, (v - in.cy) / in.fy, 1.0);
      const Hit hit = first_hit(geom, subject, center, r_t * dir_cam);
      d.at(u, v) = hit.s;
    }
  }
  return d;
}

bool inside_image(const Intrinsics& in, const Pixel& px) {
  return px.u >= 0.0 && px.u < in.width && px.v >= 0.0 && px.v < in.height;
}

/// Bounding box of the sphere silhouette via sampled rim points, clamped to
/// the image.
std::optional<HeadBox> project_sphere_box(const Camera& cam, const Vec3& center, double radius) {
  const Vec3 c_world = cam.extrinsics.camera_center();
  const Vec3 axis = center - c_world;
  const double rho = axis.norm();
  if (rho <= 2.0 * radius) return std::nullopt;
  const Vec3 a_hat = axis / rho;
  Vec3 e1 = a_hat.cross(Vec3::UnitY());
  if (e1.norm() < 1e-6) e1 = a_hat.cross(Vec3::UnitX());
  e1.normalize();
  const Vec3 e2 = a_hat.cross(e1);
  const double d_sil = (rho * rho - radius * radius) / rho;
  const double r_sil = radius * std::sqrt(rho * rho - radius * radius) / rho;
  const Vec3 q = c_world + d_sil * a_hat;

  double u0 = 1e30, v0 = 1e30, u1 = -1e30, v1 = -1e30;
  constexpr int kRimSamples = 256;
  for (int i = 0; i < kRimSamples; ++i) {
    const double th = 2.0 * M_PI * i / kRimSamples;
    const Vec3 p = q + r_sil * (std::cos(th) * e1 + std::sin(th) * e2);
    const Vec3 p_cam = cam.world_to_camera(p);
    if (!(p_cam.z() > 0.0)) return std::nullopt;
    const Pixel px = project(cam, p_cam);
    u0 = std::min(u0, px.u);
    v0 = std::min(v0, px.v);
    u1 = std::max(u1, px.u);
    v1 = std::max(v1, px.v);
  }
  HeadBox box;
  box.x0 = std::clamp(u0, 0.0, double(cam.intrinsics.width));
  box.y0 = std::clamp(v0, 0.0, double(cam.intrinsics.height));
  box.x1 = std::clamp(u1, 0.0, double(cam.intrinsics.width));
  box.y1 = std::clamp(v1, 0.0, double(cam.intrinsics.height));
  if (!(box.x0 < box.x1 && box.y0 < box.y1)) return std::nullopt;
  return box;
}

Camera make_camera(const SynthConfig& cfg, int index, Rng& rng) {
  const Vec3 room_center(cfg.room_x / 2.0, 0.0, cfg.room_z / 2.0);
  const double ring = 0.42 * std::min(cfg.room_x, cfg.room_z);
  const double angle = 2.0 * M_PI * index / cfg.camera_count + rng.uniform(-0.15, 0.15);
  const double h = cfg.room_y * rng.uniform(0.55, 0.75);
  const Vec3 pos = room_center + Vec3(ring * std::cos(angle), h, ring * std::sin(angle));
  const Vec3 look_at = room_center + Vec3(rng.uniform(-0.3, 0.3), cfg.room_y * rng.uniform(0.25, 0.45),
                                          rng.uniform(-0.3, 0.3));

  const Vec3 z_c = (look_at - pos).normalized();
  // y_cam points down-ish: the component of -Y orthogonal to the optical axis.
  Vec3 y_c = (z_c * z_c.dot(Vec3::UnitY()) - Vec3::UnitY()).normalized();
  const Vec3 x_c = y_c.cross(z_c).normalized();
  y_c = z_c.cross(x_c);

  Camera cam;
  cam.id = "cam" + std::to_string(index);
  cam.extrinsics.R.row(0) = x_c;
  cam.extrinsics.R.row(1) = y_c;
  cam.extrinsics.R.row(2) = z_c;
  cam.extrinsics.t = -cam.extrinsics.R * pos;
  cam.intrinsics.width = cfg.width;
  cam.intrinsics.height = cfg.height;
  cam.intrinsics.fx = cfg.width * rng.uniform(0.85, 0.95);
  cam.intrinsics.fy = cam.intrinsics.fx * (1.0 + 0.01 * rng.uniform(-1.0, 1.0));
  cam.intrinsics.cx = cfg.width * (0.5 + 0.01 * rng.uniform(-1.0, 1.0));
  cam.intrinsics.cy = cfg.height * (0.5 + 0.01 * rng.uniform(-1.0, 1.0));
  return cam;
}

bool sphere_clear_of_boxes(const std::vector<Box>& boxes, const Vec3& c, double r) {
  for (const Box& box : boxes) {
    Vec3 nearest;
    for (int k = 0; k < 3; ++k) nearest[k] = std::clamp(c[k], box.lo[k], box.hi[k]);
    if ((nearest - c).norm() < r + 0.05) return false;
  }
  return true;
}

}  // namespace

SynthScene generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  SynthScene scene;
  scene.cfg = cfg;
  scene.pack.scene_id = "synth" + std::to_string(cfg.seed);
  scene.geometry.room = Box{Vec3::Zero(), Vec3(cfg.room_x, cfg.room_y, cfg.room_z)};

  for (int i = 0; i < cfg.camera_count; ++i)
    scene.pack.cameras.push_back(make_camera(cfg, i, rng));

  for (int i = 0; i < cfg.occluder_count; ++i) {
    const double cx = cfg.room_x * rng.uniform(0.25, 0.75);
    const double cz = cfg.room_z * rng.uniform(0.25, 0.75);
    const double hx = rng.uniform(0.15, 0.45);
    const double hz = rng.uniform(0.15, 0.45);
    const double hy = rng.uniform(0.5, 1.4);
    Box b;
    b.lo = Vec3(std::max(0.05, cx - hx), 0.0, std::max(0.05, cz - hz));
    b.hi = Vec3(std::min(cfg.room_x - 0.05, cx + hx), std::min(cfg.room_y - 0.05, hy),
                std::min(cfg.room_z - 0.05, cz + hz));
    scene.geometry.occluders.push_back(b);
  }

  for (const Camera& cam : scene.pack.cameras)
    scene.ref_depth.push_back(render_depth(scene.geometry, nullptr, cam));

  for (int instant = 0; instant < cfg.instants; ++instant) {
    InstantTruth truth;
    Subject subject;
    bool placed = false;
    constexpr int kMaxTries = 300;
    for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
      subject.radius = cfg.head_radius;
      subject.center =
          Vec3(cfg.room_x * rng.uniform(cfg.subject_area_lo, cfg.subject_area_hi),
               rng.uniform(cfg.subject_height_lo, cfg.subject_height_hi),
               cfg.room_z * rng.uniform(cfg.subject_area_lo, cfg.subject_area_hi));
      if (subject.center.y() + subject.radius > cfg.room_y - 0.05) continue;
      if (!sphere_clear_of_boxes(scene.geometry.occluders, subject.center, subject.radius))
        continue;

      const double elev = rng.uniform(cfg.gaze_elevation_lo, cfg.gaze_elevation_hi) * M_PI / 180.0;
      const double azim = rng.uniform(0.0, 2.0 * M_PI);
      const Vec3 dir(std::cos(elev) * std::cos(azim), std::sin(elev),
                     std::cos(elev) * std::sin(azim));
      const Hit target_hit = first_hit(scene.geometry, nullptr, subject.center, dir);
      if (!std::isfinite(target_hit.s)) continue;
      const Vec3 target = subject.center + target_hit.s * dir;
      if ((target - subject.center).norm() < 0.6 + subject.radius) continue;
      const Vec3 eye = subject.center + subject.radius * dir;

      truth.head_center = subject.center;
      truth.eye_world = eye;
      truth.target_world = target;
      truth.views.clear();
      bool any_useful_view = false;
      for (const Camera& cam : scene.pack.cameras) {
        ViewTruth vt;
        const Vec3 head_cam = cam.world_to_camera(subject.center);
        vt.eye_cam = cam.world_to_camera(eye);
        vt.target_cam = cam.world_to_camera(target);
        vt.gaze_cam = cam.extrinsics.R * (target - eye);
        vt.eye_projects = vt.eye_cam.z() > 0.0;
        if (vt.eye_projects) vt.eye_px = project(cam, vt.eye_cam);
        vt.target_projects = vt.target_cam.z() > 0.0;
        if (vt.target_projects) vt.target_px = project(cam, vt.target_cam);

        const Vec3 cam_center = cam.extrinsics.camera_center();
        const bool head_in_frame = head_cam.z() > 0.0 &&
                                   inside_image(cam.intrinsics, project(cam, head_cam)) &&
                                   (subject.center - cam_center).norm() > 4.0 * subject.radius;
        vt.head_visible = head_in_frame && !segment_blocked(scene.geometry, nullptr, cam_center,
                                                            subject.center);
        if (vt.target_projects && inside_image(cam.intrinsics, vt.target_px)) {
          vt.target_vis = segment_blocked(scene.geometry, &subject, cam_center, target)
                              ? TargetVisibility::Occluded
                              : TargetVisibility::Inside;
        } else {
          vt.target_vis = TargetVisibility::Outside;
        }
        if (vt.head_visible && vt.target_vis == TargetVisibility::Inside) any_useful_view = true;
        truth.views.push_back(vt);
      }
      placed = any_useful_view;
    }
    if (!placed)
      throw Error(ErrorKind::InfeasiblePlacement,
                  "could not place subject/target after bounded retries");

    Frame frame;
    frame.instant = instant;
    std::vector<AbsoluteDepthMap> instant_depth;
    for (size_t c = 0; c < scene.pack.cameras.size(); ++c) {
      const Camera& cam = scene.pack.cameras[c];
      const ViewTruth& vt = truth.views[c];
      instant_depth.push_back(render_depth(scene.geometry, &subject, cam));

      Annotation ann;
      ann.scene_id = scene.pack.scene_id;
      ann.camera_id = cam.id;
      ann.subject_id = "s0";
      ann.image_id = scene.pack.scene_id + "_t" + std::to_string(instant) + "_" + cam.id;
      ann.head_visible = vt.head_visible;
      ann.visibility = vt.target_vis;
      if (vt.head_visible) {
        ann.head_box = project_sphere_box(cam, subject.center, subject.radius);
        if (!ann.head_box) ann.head_visible = false;
      }
      if (ann.head_visible && vt.eye_projects) {
        Pixel px = vt.eye_px;
        if (cfg.pixel_jitter > 0.0) {
          px.u += rng.normal(0.0, cfg.pixel_jitter);
          px.v += rng.normal(0.0, cfg.pixel_jitter);
        }
        ann.eye_px = px;
      }
      if (target_in_frame(vt.target_vis)) {
        Pixel px = vt.target_px;
        if (cfg.pixel_jitter > 0.0) {
          px.u += rng.normal(0.0, cfg.pixel_jitter);
          px.v += rng.normal(0.0, cfg.pixel_jitter);
        }
        ann.gaze_point = px;
      }
      frame.annotations.push_back(std::move(ann));
    }
    scene.depth.push_back(std::move(instant_depth));
    scene.pack.frames.push_back(std::move(frame));
    scene.truth.push_back(std::move(truth));
  }
  return scene;
}

FovHeatmap oracle_fov(const SynthScene& scene, int instant, int camera_index,
                      const DecayConfig& decay) {
  const Camera& cam = scene.pack.cameras[size_t(camera_index)];
  const InstantTruth& truth = scene.truth[size_t(instant)];
  const ViewTruth& vt = truth.views[size_t(camera_index)];
  Subject subject{truth.head_center, scene.cfg.head_radius};

  const Intrinsics& in = cam.intrinsics;
  FovHeatmap hm(in.width, in.height);
  const Mat3 r_t = cam.extrinsics.R.transpose();
  const Vec3 center = cam.extrinsics.camera_center();
  const Vec3 eye_cam = vt.eye_cam;
  const Vec3 g = vt.gaze_cam;
  const double g_norm = g.norm();
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const Vec3 dir_cam((u - in.cx) / in.fx, (v - in.cy) / in.fy, 1.0);
      const Hit hit = first_hit(scene.geometry, &subject, center, r_t * dir_cam);
      const Vec3 p_cam = hit.s * dir_cam;
      const Vec3 d = p_cam - eye_cam;
      const double n = d.norm();
      hm.at(u, v) = n == 0.0 ? 0.0 : decayed_cosine(d.dot(g) / (n * g_norm), decay);
    }
  }
  if (eye_cam.z() > 0.0) {
    const Pixel eye_px = project(cam, eye_cam);
    const int eu = int(std::lround(eye_px.u));
    const int ev = int(std::lround(eye_px.v));
    if (eu >= 0 && eu < hm.width && ev >= 0 && ev < hm.height) hm.at(eu, ev) = 0.0;
  }
  return hm;
}

std::pair<DepthMap, ScaleShift> corrupt_depth(const AbsoluteDepthMap& abs, double scale,
                                              double shift, double outlier_fraction,
                                              uint64_t seed) {
  if (!(scale > 0.0)) throw Error(ErrorKind::ParseError, "scale must be positive");
  DepthMap rel;
  rel.width = abs.width;
  rel.height = abs.height;
  rel.values.resize(abs.size());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (size_t i = 0; i < abs.size(); ++i) {
    const double r = (abs.values[i] - shift) / scale;
    if (!(r > 0.0))
      throw Error(ErrorKind::NonPositiveResult, "shift too large for this depth map");
    rel.values[i] = r;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  Rng rng(seed);
  for (size_t i = 0; i < rel.values.size(); ++i) {
    if (rng.uniform() < outlier_fraction)
      rel.values[i] = rng.uniform(0.5 * lo, 1.5 * hi);
  }
  ScaleShift planted;
  planted.a = scale;
  planted.b = shift;
  return {std::move(rel), planted};
}

PixelMask subject_mask(const SynthScene& scene, int instant, int camera_index) {
  const Camera& cam = scene.pack.cameras[size_t(camera_index)];
  const InstantTruth& truth = scene.truth[size_t(instant)];
  Subject subject{truth.head_center, scene.cfg.head_radius};
  const Intrinsics& in = cam.intrinsics;
  PixelMask mask(in.width, in.height, false);
  const Mat3 r_t = cam.extrinsics.R.transpose();
  const Vec3 center = cam.extrinsics.camera_center();
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const Vec3 dir_cam((u - in.cx) / in.fx, (v - in.cy) / in.fy, 1.0);
      const Hit hit = first_hit(scene.geometry, &subject, center, r_t * dir_cam);
      mask.set(u, v, hit.prim == kPrimSphere);
    }
  }
  return mask;
}

io::Image8 render_image(const SynthScene& scene, int instant, int camera_index) {
  const Camera& cam = scene.pack.cameras[size_t(camera_index)];
  const InstantTruth& truth = scene.truth[size_t(instant)];
  Subject subject{truth.head_center, scene.cfg.head_radius};

  static const double kPalette[][3] = {
      {0.75, 0.35, 0.30}, {0.30, 0.55, 0.75}, {0.40, 0.70, 0.35},
      {0.80, 0.65, 0.25}, {0.55, 0.40, 0.70}, {0.35, 0.65, 0.60},
  };
  const Vec3 light = Vec3(0.35, 1.0, 0.2).normalized();

  const Intrinsics& in = cam.intrinsics;
  io::Image8 img(in.width, in.height, 3);
  const Mat3 r_t = cam.extrinsics.R.transpose();
  const Vec3 center = cam.extrinsics.camera_center();
  for (int v = 0; v < in.height; ++v) {
    for (int u = 0; u < in.width; ++u) {
      const Vec3 dir_world = r_t * Vec3((u - in.cx) / in.fx, (v - in.cy) / in.fy, 1.0);
      const Hit hit = first_hit(scene.geometry, &subject, center, dir_world);
      const Vec3 p = center + hit.s * dir_world;

      Vec3 albedo(0.7, 0.7, 0.7);
      Vec3 normal = Vec3::UnitY();
      if (hit.prim == kPrimSphere) {
        albedo = Vec3(0.85, 0.66, 0.55);
        normal = (p - subject.center).normalized();
      } else {
        const Box& box =
            hit.prim == kPrimRoom ? scene.geometry.room
                                  : scene.geometry.occluders[size_t(hit.prim - kPrimOccluderBase)];
        // Face with the smallest wall distance decides the normal.
        int axis = 0;
        double best = std::numeric_limits<double>::infinity();
        double sign = 1.0;
        for (int k = 0; k < 3; ++k) {
          const double d_lo = std::abs(p[k] - box.lo[k]);
          const double d_hi = std::abs(p[k] - box.hi[k]);
          if (d_lo < best) {
            best = d_lo;
            axis = k;
            sign = -1.0;
          }
          if (d_hi < best) {
            best = d_hi;
            axis = k;
            sign = 1.0;
          }
        }
        normal = Vec3::Zero();
        normal[axis] = sign;
        if (hit.prim == kPrimRoom) {
          const double shade = axis == 1 ? (sign < 0 ? 0.55 : 0.9) : 0.68 + 0.04 * axis;
          albedo = Vec3(shade, shade, shade);
          if (axis == 1 && sign < 0) {
            // Checkered floor gives the stem some texture.
            const int checker = (int(std::floor(p.x())) + int(std::floor(p.z()))) & 1;
            albedo *= checker ? 1.0 : 0.8;
          }
        } else {
          const double* c = kPalette[size_t(hit.prim - kPrimOccluderBase) % 6];
          albedo = Vec3(c[0], c[1], c[2]);
        }
      }
      if (normal.dot(dir_world) > 0.0) normal = -normal;
      const double intensity = 0.45 + 0.55 * std::max(0.0, normal.dot(light));
      for (int c = 0; c < 3; ++c)
        img.at(u, v, c) = uint8_t(std::lround(std::clamp(albedo[c] * intensity, 0.0, 1.0) * 255.0));
    }
  }
  return img;
}

ScenePack write_scene_files(const SynthScene& scene, const std::string& dir) {
  namespace io = mvgaze::io;
  fs::create_directories(fs::path(dir) / "depth");
  fs::create_directories(fs::path(dir) / "refdepth");
  fs::create_directories(fs::path(dir) / "images");

  ScenePack pack = scene.pack;
  for (size_t c = 0; c < pack.cameras.size(); ++c) {
    const std::string rel = "refdepth/" + pack.cameras[c].id + ".dpth";
    io::write_dpth((fs::path(dir) / rel).string(), scene.ref_depth[c]);
    pack.ref_depth_files[pack.cameras[c].id] = rel;
  }
  for (size_t f = 0; f < pack.frames.size(); ++f) {
    Frame& frame = pack.frames[f];
    for (size_t c = 0; c < pack.cameras.size(); ++c) {
      const std::string& cam_id = pack.cameras[c].id;
      const std::string tag = "t" + std::to_string(frame.instant) + "_" + cam_id;
      const std::string depth_rel = "depth/" + tag + ".dpth";
      io::write_dpth((fs::path(dir) / depth_rel).string(), scene.depth[f][c]);
      frame.depth_files[cam_id] = depth_rel;
      const std::string img_rel = "images/" + tag + ".png";
      io::write_png((fs::path(dir) / img_rel).string(),
                    render_image(scene, int(f), int(c)));
      frame.image_files[cam_id] = img_rel;
    }
  }
  save_manifest(pack, (fs::path(dir) / "manifest.json").string());

  nlohmann::json gt;
  gt["scene_id"] = pack.scene_id;
  gt["instants"] = nlohmann::json::array();
  for (size_t i = 0; i < scene.truth.size(); ++i) {
    const InstantTruth& t = scene.truth[i];
    nlohmann::json ji;
    ji["instant"] = int(i);
    ji["head_center"] = {t.head_center.x(), t.head_center.y(), t.head_center.z()};
    ji["eye_world"] = {t.eye_world.x(), t.eye_world.y(), t.eye_world.z()};
    ji["target_world"] = {t.target_world.x(), t.target_world.y(), t.target_world.z()};
    ji["views"] = nlohmann::json::array();
    for (size_t c = 0; c < t.views.size(); ++c) {
      const ViewTruth& vt = t.views[c];
      nlohmann::json jv;
      jv["camera_id"] = pack.cameras[c].id;
      jv["head_visible"] = vt.head_visible;
      jv["target_visibility"] = to_string(vt.target_vis);
      jv["gaze_cam"] = {vt.gaze_cam.x(), vt.gaze_cam.y(), vt.gaze_cam.z()};
      ji["views"].push_back(std::move(jv));
    }
    gt["instants"].push_back(std::move(ji));
  }
  std::ofstream os((fs::path(dir) / "groundtruth.json").string());
  os << gt.dump(2) << "\n";
  return pack;
}

}  // namespace mvgaze::synth
