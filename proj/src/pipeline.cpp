#include "mvgaze/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "mvgaze/io/dpth.hpp"
#include "mvgaze/rng.hpp"

namespace mvgaze::pipeline {

namespace fs = std::filesystem;

LoadedScene load_scene(const std::string& manifest_path) {
  LoadedScene scene;
  scene.pack = load_manifest(manifest_path);
  scene.dir = fs::path(manifest_path).parent_path().string();
  return scene;
}

std::string resolve_path(const std::string& dir, const std::string& rel) {
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(dir) / p).string();
}

PixelMask subject_exclusion_mask(const Annotation& ann, int width, int height, double inflate) {
  PixelMask mask(width, height, true);
  if (!ann.head_box) return mask;
  const HeadBox& box = *ann.head_box;
  const double cu = box.center_u(), cv = box.center_v();
  const double hw = 0.5 * (box.x1 - box.x0) * inflate;
  const double hh = 0.5 * (box.y1 - box.y0) * inflate;
  const int u0 = std::max(0, int(std::floor(cu - hw)));
  const int u1 = std::min(width - 1, int(std::ceil(cu + hw)));
  const int v0 = std::max(0, int(std::floor(cv - hh)));
  const int v1 = std::min(height - 1, int(std::ceil(cv + hh)));
  for (int v = v0; v <= v1; ++v)
    for (int u = u0; u <= u1; ++u) mask.set(u, v, false);
  return mask;
}

CrossViewChain cross_view_fov(const Camera& cam_primary, const DepthMap& depth_primary,
                              const AbsoluteDepthMap& ref_primary, const PixelMask& mask_primary,
                              const Camera& cam_reference, const DepthMap& depth_reference,
                              const AbsoluteDepthMap& ref_reference,
                              const PixelMask& mask_reference, const Pixel& eye_px_reference,
                              const GazeVector& gaze_reference, const RansacConfig& ransac_cfg,
                              const DecayConfig& decay, int threads) {
  CrossViewChain chain;
  chain.fit_primary = ransac_scale_shift(depth_primary, ref_primary, mask_primary, ransac_cfg);
  RansacConfig ref_cfg = ransac_cfg;
  ref_cfg.seed = ransac_cfg.seed + 1;
  chain.fit_reference =
      ransac_scale_shift(depth_reference, ref_reference, mask_reference, ref_cfg);

  const AbsoluteDepthMap abs_reference = apply_scale_shift(depth_reference, chain.fit_reference);
  const int eu = std::clamp(int(std::lround(eye_px_reference.u)), 0, abs_reference.width - 1);
  const int ev = std::clamp(int(std::lround(eye_px_reference.v)), 0, abs_reference.height - 1);
  chain.eye_reference_abs =
      backproject(cam_reference, eye_px_reference, abs_reference.at(eu, ev));
  chain.eye_primary_abs = transform_point(cam_reference, cam_primary, chain.eye_reference_abs);
  chain.gaze_primary =
      relative_rotation(cam_primary.extrinsics, cam_reference.extrinsics) * gaze_reference;

  const AbsoluteDepthMap abs_primary = apply_scale_shift(depth_primary, chain.fit_primary);
  const PointGrid cloud = pseudo_pointcloud(cam_primary, abs_primary);
  chain.fov = fov_heatmap_cross_view(cam_primary, cloud, chain.eye_primary_abs,
                                     chain.gaze_primary, decay, threads);
  return chain;
}

// ---- prepared samples ----------------------------------------------------

const nn::EsaGeometry* EsaGeometryCache::get(const Camera& from, const Camera& to, int grid_w,
                                             int grid_h, int samples) {
  const std::string key = from.id + "->" + to.id + "@" + std::to_string(grid_w) + "x" +
                          std::to_string(grid_h) + "s" + std::to_string(samples);
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_.emplace(key, nn::esa_geometry(from, to, grid_w, grid_h, samples)).first;
  return &it->second;
}

namespace {

/// Area-average an 8-bit image channel onto a tensor channel in [0,1].
void downsample_channel(const io::Image8& img, int channel, double* dst, int out_w, int out_h) {
  const int fx = img.width / out_w;
  const int fy = img.height / out_h;
  const double norm = 1.0 / (255.0 * fx * fy);
  for (int v = 0; v < out_h; ++v)
    for (int u = 0; u < out_w; ++u) {
      double sum = 0.0;
      for (int dy = 0; dy < fy; ++dy)
        for (int dx = 0; dx < fx; ++dx)
          sum += img.at(u * fx + dx, v * fy + dy, channel % img.channels);
      dst[size_t(v) * out_w + u] = sum * norm;
    }
}

double bilinear_u8(const io::Image8& img, int channel, double x, double y) {
  const double xc = std::clamp(x, 0.0, double(img.width - 1));
  const double yc = std::clamp(y, 0.0, double(img.height - 1));
  const int x0 = int(std::floor(xc)), y0 = int(std::floor(yc));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double wx = xc - x0, wy = yc - y0;
  return (1 - wy) * ((1 - wx) * img.at(x0, y0, channel) + wx * img.at(x1, y0, channel)) +
         wy * ((1 - wx) * img.at(x0, y1, channel) + wx * img.at(x1, y1, channel));
}

std::shared_ptr<PreparedView> prepare_view(const LoadedScene& scene, const Frame& frame,
                                           const Annotation& ann, const nn::ModelConfig& mc) {
  auto view = std::make_shared<PreparedView>();
  view->cam = scene.pack.camera(ann.camera_id);
  view->ann = ann;
  const int w = view->cam.intrinsics.width;
  const int h = view->cam.intrinsics.height;
  if (w % mc.scene_in_w != 0 || h % mc.scene_in_h != 0)
    throw Error(ErrorKind::ShapeMismatch,
                "scene size must be an integer multiple of the network input size");

  view->depth = io::read_depth(resolve_path(scene.dir, frame.depth_files.at(ann.camera_id)));
  if (view->depth.width != w || view->depth.height != h)
    throw Error(ErrorKind::ShapeMismatch, "depth map size does not match camera");
  io::Image8 image = io::read_png(resolve_path(scene.dir, frame.image_files.at(ann.camera_id)));
  if (image.width != w || image.height != h)
    throw Error(ErrorKind::ShapeMismatch, "image size does not match camera");

  const int sw = mc.scene_in_w, sh = mc.scene_in_h;
  view->scene_base = nn::Tensor({5, sh, sw});
  for (int c = 0; c < 3; ++c)
    downsample_channel(image, c, view->scene_base.v.data() + size_t(c) * sh * sw, sw, sh);
  if (ann.head_visible && ann.head_box) {
    const PixelMask mask = head_mask(ann, w, h, sw, sh);
    for (int i = 0; i < sw * sh; ++i)
      view->scene_base.v[size_t(3) * sh * sw + i] = mask.values[size_t(i)] ? 1.0 : 0.0;
  }

  view->head_crop = nn::Tensor({3, mc.head_crop, mc.head_crop});
  view->head_present = ann.head_visible && ann.head_box.has_value();
  if (view->head_present) {
    const HeadBox& box = *ann.head_box;
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < mc.head_crop; ++j)
        for (int i = 0; i < mc.head_crop; ++i) {
          const double sx = box.x0 + (i + 0.5) / mc.head_crop * (box.x1 - box.x0) - 0.5;
          const double sy = box.y0 + (j + 0.5) / mc.head_crop * (box.y1 - box.y0) - 0.5;
          view->head_crop.v[(size_t(c) * mc.head_crop + j) * mc.head_crop + i] =
              bilinear_u8(image, c, sx, sy) / 255.0;
        }
    view->head_center_norm = Vec2(box.center_u() / w, box.center_v() / h);
  }

  if (const auto eye_px = ann.eye_or_box_center()) {
    const int eu = std::clamp(int(std::lround(eye_px->u)), 0, w - 1);
    const int ev = std::clamp(int(std::lround(eye_px->v)), 0, h - 1);
    view->eye = EyeLocation{*eye_px, backproject(view->cam, *eye_px, view->depth.at(eu, ev))};
  }

  view->gt_in = target_in_frame(ann.visibility);
  if (ann.gaze_point) {
    const double gu = std::clamp(ann.gaze_point->u, 0.0, w - 1e-6);
    const double gv = std::clamp(ann.gaze_point->v, 0.0, h - 1e-6);
    view->gt_point_norm = Vec2(gu / w, gv / h);
    view->gt_heatmap_px = Pixel{gu / w * mc.heatmap_size, gv / h * mc.heatmap_size};
    if (view->eye) {
      const int tu = int(std::lround(gu)), tv = int(std::lround(gv));
      const int eu = int(std::lround(view->eye->px.u)), ev = int(std::lround(view->eye->px.v));
      if (tu != eu || tv != ev) {
        const Vec3 p_target =
            backproject(view->cam, Pixel{gu, gv}, view->depth.at(tu, tv));
        view->gt_gaze = p_target - view->eye->p3;
      }
    }
  }
  return view;
}

struct SceneViewKey {
  int frame;
  std::string cam;
  bool operator<(const SceneViewKey& o) const {
    return frame != o.frame ? frame < o.frame : cam < o.cam;
  }
};

}  // namespace

namespace {

PreparedPair make_pair(const LoadedScene& scene, const Frame& frame,
                       std::shared_ptr<const PreparedView> primary,
                       std::shared_ptr<const PreparedView> reference, PairKind kind,
                       const DatasetOptions& opts, EsaGeometryCache& esa_cache,
                       uint64_t ransac_salt) {
  PreparedPair pair;
  pair.view[0] = primary;
  pair.view[1] = reference;
  pair.r21 = relative_rotation(primary->cam.extrinsics, reference->cam.extrinsics);
  pair.r12 = relative_rotation(reference->cam.extrinsics, primary->cam.extrinsics);
  const nn::ModelConfig& mc = opts.model;
  pair.esa_12 =
      esa_cache.get(primary->cam, reference->cam, mc.grid_w(), mc.grid_h(), mc.esa_samples);
  pair.esa_21 =
      esa_cache.get(reference->cam, primary->cam, mc.grid_w(), mc.grid_h(), mc.esa_samples);
  pair.mode = kind == PairKind::CrossView ? nn::ForwardMode::CrossView : nn::ForwardMode::Standard;
  pair.primary_image_id = primary->ann.image_id;
  pair.reference_camera_id = reference->ann.camera_id;

  if (kind == PairKind::CrossView) {
    if (scene.pack.ref_depth_files.empty())
      throw Error(ErrorKind::ParseError, "cross-view pairs need reference depth files");
    const auto& cams = scene.pack;
    const AbsoluteDepthMap ref_p = io::read_depth(
        resolve_path(scene.dir, cams.ref_depth_files.at(primary->ann.camera_id)));
    const AbsoluteDepthMap ref_r = io::read_depth(
        resolve_path(scene.dir, cams.ref_depth_files.at(reference->ann.camera_id)));
    if (!reference->eye)
      throw Error(ErrorKind::ParseError, "cross-view reference view has no eye location");
    RansacConfig rcfg = opts.ransac;
    rcfg.seed = opts.ransac_seed * 1000003ULL + ransac_salt;

    const PixelMask mask_p = subject_exclusion_mask(primary->ann, ref_p.width, ref_p.height);
    const PixelMask mask_r = subject_exclusion_mask(reference->ann, ref_r.width, ref_r.height);
    const ScaleShift fit_p = ransac_scale_shift(primary->depth, ref_p, mask_p, rcfg);
    RansacConfig rcfg_r = rcfg;
    rcfg_r.seed = rcfg.seed + 1;
    const ScaleShift fit_r = ransac_scale_shift(reference->depth, ref_r, mask_r, rcfg_r);

    const AbsoluteDepthMap abs_r = apply_scale_shift(reference->depth, fit_r);
    const Pixel eye_px = reference->eye->px;
    const int eu = std::clamp(int(std::lround(eye_px.u)), 0, abs_r.width - 1);
    const int ev = std::clamp(int(std::lround(eye_px.v)), 0, abs_r.height - 1);
    const Vec3 eye_abs_r = backproject(reference->cam, eye_px, abs_r.at(eu, ev));
    pair.eye_primary_abs = transform_point(reference->cam, primary->cam, eye_abs_r);
    pair.abs_depth_primary = apply_scale_shift(primary->depth, fit_p);
  }
  return pair;
}

}  // namespace

std::vector<PreparedPair> prepare_pairs(const std::vector<LoadedScene>& scenes,
                                        const DatasetOptions& opts, EsaGeometryCache& esa_cache) {
  std::vector<PreparedPair> out;
  uint64_t salt = 0;
  for (const LoadedScene& scene : scenes) {
    std::map<SceneViewKey, std::shared_ptr<const PreparedView>> view_cache;
    auto get_view = [&](const Frame& frame,
                        const Annotation& ann) -> std::shared_ptr<const PreparedView> {
      const SceneViewKey key{frame.instant, ann.camera_id};
      auto it = view_cache.find(key);
      if (it == view_cache.end())
        it = view_cache.emplace(key, prepare_view(scene, frame, ann, opts.model)).first;
      return it->second;
    };
    const auto samples = enumerate_pairs(scene.pack, opts.pair_mode);
    for (const ViewPairSample& s : samples) {
      if (opts.max_pairs > 0 && int(out.size()) >= opts.max_pairs) return out;
      const Frame* frame = nullptr;
      for (const Frame& f : scene.pack.frames)
        if (f.instant == s.instant) frame = &f;
      out.push_back(make_pair(scene, *frame, get_view(*frame, s.primary),
                              get_view(*frame, s.reference), opts.pair_mode, opts, esa_cache,
                              salt++));
    }
  }
  return out;
}

// ---- forward / training ----------------------------------------------------

namespace {

void write_fov_channel(nn::Tensor& scene, const FovHeatmap& fov_native, int sw, int sh) {
  const FovHeatmap small = downsample_area(fov_native, sw, sh);
  for (int i = 0; i < sw * sh; ++i) scene.v[size_t(4) * sh * sw + i] = small.values[size_t(i)];
}

struct PairPass {
  nn::PairNetInput net;
  nn::GazePhase gaze_phase;
  nn::ScenePhase scene_phase;
  PairEvaluation eval;
  // per-view loss grads
  nn::Tensor d_heatmap[2];
  double d_logit[2] = {0.0, 0.0};
  Vec3 d_g[2] = {Vec3::Zero(), Vec3::Zero()};
  double d_log_sigma[2] = {0.0, 0.0};
  std::vector<std::optional<FovHeatmap>> gt_heatmaps;
};

PairPass forward_pass(nn::ToyModel& model, const PreparedPair& pair, bool with_loss_grads,
                      double loss_scale, int threads) {
  PairPass pass;
  const nn::ModelConfig& mc = model.cfg;
  pass.net.r21 = pair.r21;
  pass.net.r12 = pair.r12;
  pass.net.esa_12 = pair.esa_12;
  pass.net.esa_21 = pair.esa_21;
  for (int v = 0; v < 2; ++v) {
    pass.net.view[v].head_crop = pair.view[v]->head_crop;
    pass.net.view[v].head_present = pair.view[v]->head_present;
    pass.net.view[v].head_center_norm = pair.view[v]->head_center_norm;
    pass.net.view[v].scene = pair.view[v]->scene_base;
  }

  pass.gaze_phase = nn::gaze_phase_forward(model, pass.net);
  for (int v = 0; v < 2; ++v) {
    pass.eval.pred[v].g = pass.gaze_phase.gaze[v].g;
    pass.eval.pred[v].sigma = pass.gaze_phase.gaze[v].sigma;
    pass.eval.pred[v].view_id = pair.view[v]->cam.id;
  }

  // UGS + FoV priors (no gradient flows through the prior channel).
  if (pair.mode == nn::ForwardMode::Standard) {
    pass.eval.selection = select_and_transfer(pass.eval.pred[0], pass.eval.pred[1],
                                              pair.view[0]->cam, pair.view[1]->cam);
    for (int v = 0; v < 2; ++v) {
      if (!pair.view[v]->eye) continue;
      const GazeVector g = v == 0 ? pass.eval.selection.g_primary : pass.eval.selection.g_reference;
      const PointGrid cloud = pseudo_pointcloud(pair.view[v]->cam, pair.view[v]->depth);
      const FovHeatmap fov = fov_heatmap(cloud, *pair.view[v]->eye, g, mc.decay, threads);
      write_fov_channel(pass.net.view[v].scene, fov, mc.scene_in_w, mc.scene_in_h);
    }
  } else {
    pass.eval.selection.chosen_view = pair.view[1]->cam.id;
    pass.eval.selection.chosen_sigma = pass.eval.pred[1].sigma;
    pass.eval.selection.g_reference = pass.eval.pred[1].g;
    pass.eval.selection.g_primary = pair.r21 * pass.eval.pred[1].g;
    pass.eval.selection.replaced_primary = true;
    const PointGrid cloud_p = pseudo_pointcloud(pair.view[0]->cam, *pair.abs_depth_primary);
    const FovHeatmap fov_p = fov_heatmap_cross_view(
        pair.view[0]->cam, cloud_p, *pair.eye_primary_abs, pass.eval.selection.g_primary,
        mc.decay, threads);
    write_fov_channel(pass.net.view[0].scene, fov_p, mc.scene_in_w, mc.scene_in_h);
    if (pair.view[1]->eye) {
      const PointGrid cloud_r = pseudo_pointcloud(pair.view[1]->cam, pair.view[1]->depth);
      const FovHeatmap fov_r =
          fov_heatmap(cloud_r, *pair.view[1]->eye, pass.eval.pred[1].g, mc.decay, threads);
      write_fov_channel(pass.net.view[1].scene, fov_r, mc.scene_in_w, mc.scene_in_h);
    }
  }

  pass.scene_phase = nn::scene_phase_forward(model, pass.net, pass.gaze_phase.hia_out.e1,
                                             pass.gaze_phase.hia_out.e2, pair.r21, pair.mode);
  for (int v = 0; v < 2; ++v) {
    pass.eval.decoded[v] = pass.scene_phase.decoded[v];
    if (pass.eval.decoded[v]) pass.eval.outputs[v] = pass.scene_phase.outputs[v];
  }

  // ---- losses --------------------------------------------------------------
  std::vector<nn::ModelOutputs> outs;
  std::vector<bool> gt_in;
  std::vector<double> gaze_losses;
  pass.gt_heatmaps.clear();
  int hm_views = 0;
  for (int v = 0; v < 2; ++v) {
    if (!pass.eval.decoded[v]) continue;
    outs.push_back(pass.eval.outputs[v]);
    gt_in.push_back(pair.view[v]->gt_in);
    if (pair.view[v]->gt_heatmap_px) {
      pass.gt_heatmaps.emplace_back(nn::gaussian_target_heatmap(
          *pair.view[v]->gt_heatmap_px, mc.gaussian_sigma_px, mc.heatmap_size));
      ++hm_views;
    } else {
      pass.gt_heatmaps.emplace_back(std::nullopt);
    }
  }
  struct GazeTerm {
    int view;
    GazeLossResult result;
  };
  std::vector<GazeTerm> gaze_terms;
  for (int v = 0; v < 2; ++v) {
    if (!pair.view[v]->head_present || !pair.view[v]->gt_gaze) continue;
    gaze_terms.push_back(
        {v, gaze_loss(pass.gaze_phase.gaze[v].g, pass.gaze_phase.gaze[v].sigma,
                      *pair.view[v]->gt_gaze)});
    gaze_losses.push_back(gaze_terms.back().result.loss);
  }
  nn::TotalLossWeights w{mc.loss_alpha, mc.loss_beta, mc.loss_lambda};
  pass.eval.loss = nn::total_loss(outs, pass.gt_heatmaps, gt_in, gaze_losses, w);

  if (!with_loss_grads) return pass;

  const int io_views = int(outs.size());
  int out_idx = 0;
  for (int v = 0; v < 2; ++v) {
    if (!pass.eval.decoded[v]) continue;
    const auto& gt_hm = pass.gt_heatmaps[size_t(out_idx)];
    pass.d_heatmap[v] = nn::Tensor({mc.heatmap_size, mc.heatmap_size});
    if (gt_hm && hm_views > 0) {
      const double scale = loss_scale * mc.loss_alpha / hm_views * 2.0 /
                           double(mc.heatmap_size * mc.heatmap_size);
      for (size_t i = 0; i < pass.d_heatmap[v].v.size(); ++i)
        pass.d_heatmap[v].v[i] =
            scale * (pass.eval.outputs[v].heatmap.values[i] - gt_hm->values[i]);
    }
    const double y = pair.view[v]->gt_in ? 1.0 : 0.0;
    pass.d_logit[v] = loss_scale * mc.loss_beta / io_views *
                      (nn::sigmoid(pass.scene_phase.dec[v].io_logit) - y);
    ++out_idx;
  }
  for (const GazeTerm& term : gaze_terms) {
    const double scale = loss_scale * mc.loss_lambda / double(gaze_terms.size());
    pass.d_g[term.view] = scale * term.result.d_g;
    // Chain through sigma = exp(log_sigma).
    pass.d_log_sigma[term.view] =
        scale * term.result.d_sigma * pass.gaze_phase.gaze[term.view].sigma;
  }
  return pass;
}

}  // namespace

PairEvaluation evaluate_pair(nn::ToyModel& model, const PreparedPair& pair, int threads) {
  return forward_pass(model, pair, false, 1.0, threads).eval;
}

PairEvaluation train_pair(nn::ToyModel& model, const PreparedPair& pair, double loss_scale,
                          int threads) {
  PairPass pass = forward_pass(model, pair, true, loss_scale, threads);
  auto [d_e1, d_e2] =
      nn::scene_phase_backward(model, pass.scene_phase, pass.d_heatmap, pass.d_logit);
  const nn::Tensor d_e_extra[2] = {d_e1, d_e2};
  nn::gaze_phase_backward(model, pass.gaze_phase, pass.d_g, pass.d_log_sigma, d_e_extra);
  return pass.eval;
}

double dataset_loss(nn::ToyModel& model, const std::vector<PreparedPair>& pairs, int threads) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no pairs to evaluate");
  double sum = 0.0;
  for (const auto& pair : pairs) sum += evaluate_pair(model, pair, threads).loss;
  return sum / double(pairs.size());
}

TrainResult train_toy(nn::ToyModel& model, const std::vector<PreparedPair>& pairs,
                      const TrainConfig& cfg) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no training pairs");
  TrainResult result;
  Rng rng(cfg.seed);
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto reshuffle = [&]() {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
  };
  reshuffle();

  size_t cursor = 0;
  const int batch = std::max(1, std::min<int>(cfg.batch, int(pairs.size())));
  for (int step = 1; step <= cfg.steps; ++step) {
    model.zero_grads();
    double batch_loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      if (cursor >= order.size()) {
        reshuffle();
        cursor = 0;
      }
      const PairEvaluation ev =
          train_pair(model, pairs[order[cursor++]], 1.0 / batch, cfg.threads);
      if (!std::isfinite(ev.loss))
        throw Error(ErrorKind::NonPositiveResult, "non-finite loss during training");
      batch_loss += ev.loss / batch;
    }
    model.sgd_step(cfg.lr);
    result.step_loss.push_back(batch_loss);
    if (step == 1) result.full_loss_after_step1 = dataset_loss(model, pairs, cfg.threads);
  }
  result.full_loss_final = dataset_loss(model, pairs, cfg.threads);
  return result;
}

}  // namespace mvgaze::pipeline
