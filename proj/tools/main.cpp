#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mvgaze/eval.hpp"
#include "mvgaze/io/dpth.hpp"
#include "mvgaze/io/png_io.hpp"
#include "mvgaze/parallel.hpp"
#include "mvgaze/pipeline.hpp"
#include "mvgaze/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvgaze;

namespace {

Pixel parse_pixel(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw Error(ErrorKind::ParseError, "expected 'u,v' but got " + s);
  return Pixel{std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

Vec3 parse_vec3(const std::string& s) {
  double x[3];
  size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const size_t comma = i < 2 ? s.find(',', pos) : s.size();
    if (comma == std::string::npos)
      throw Error(ErrorKind::ParseError, "expected 'x,y,z' but got " + s);
    x[i] = std::stod(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return Vec3(x[0], x[1], x[2]);
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

/// Config values override parsed flags, per the documented precedence.
void apply_config_overrides(const std::string& config_path,
                            const std::map<std::string, std::function<void(const json&)>>& keys) {
  if (config_path.empty()) return;
  std::ifstream is(config_path);
  if (!is) throw Error(ErrorKind::IoError, "cannot open config " + config_path);
  json j = json::parse(is);
  for (const auto& [key, apply] : keys) {
    if (j.contains(key)) apply(j.at(key));
  }
}

io::Image8 heatmap_to_png(const FovHeatmap& hm) {
  io::Image8 img(hm.width, hm.height, 1);
  for (int v = 0; v < hm.height; ++v)
    for (int u = 0; u < hm.width; ++u)
      img.at(u, v, 0) = uint8_t(std::lround(std::clamp(hm.at(u, v), 0.0, 1.0) * 255.0));
  return img;
}

GazePrediction load_prediction(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path);
  json j = json::parse(is);
  GazePrediction p;
  p.view_id = j.at("view_id").get<std::string>();
  const auto g = j.at("g").get<std::vector<double>>();
  if (g.size() != 3) throw Error(ErrorKind::ParseError, "prediction g needs 3 numbers");
  p.g = Vec3(g[0], g[1], g[2]);
  p.sigma = j.at("sigma").get<double>();
  if (!(p.sigma > 0.0)) throw Error(ErrorKind::ParseError, "sigma must be positive");
  return p;
}

// ---- subcommand implementations ------------------------------------------

int run_synth(uint64_t seed, int cameras, int width, int height, int occluders, int instants,
              double head_radius, double pixel_jitter, const std::string& out_dir) {
  synth::SynthConfig cfg;
  cfg.seed = seed;
  cfg.camera_count = cameras;
  cfg.width = width;
  cfg.height = height;
  cfg.occluder_count = occluders;
  cfg.instants = instants;
  cfg.head_radius = head_radius;
  cfg.pixel_jitter = pixel_jitter;
  const synth::SynthScene scene = synth::generate(cfg);
  fs::create_directories(out_dir);
  synth::write_scene_files(scene, out_dir);
  std::cout << "wrote scene " << scene.pack.scene_id << " to " << out_dir << "\n";
  return 0;
}

int run_fov(const std::string& manifest, int instant, const std::string& camera,
            const std::string& gaze_str, bool use_gt_gaze, double gamma, double threshold,
            int threads, const std::string& out_base) {
  const pipeline::LoadedScene scene = pipeline::load_scene(manifest);
  const Camera& cam = scene.pack.camera(camera);
  const Frame* frame = nullptr;
  for (const Frame& f : scene.pack.frames)
    if (f.instant == instant) frame = &f;
  if (!frame) throw Error(ErrorKind::UnknownScene, "no such instant in manifest");
  const Annotation* ann = nullptr;
  for (const Annotation& a : frame->annotations)
    if (a.camera_id == camera) ann = &a;
  if (!ann) throw Error(ErrorKind::UnknownScene, "no annotation for camera " + camera);

  const DepthMap depth =
      io::read_depth(pipeline::resolve_path(scene.dir, frame->depth_files.at(camera)));
  const PointGrid cloud = pseudo_pointcloud(cam, depth);
  const auto eye_px = ann->eye_or_box_center();
  if (!eye_px) throw Error(ErrorKind::ParseError, "annotation has no eye or head box");
  const int eu = std::clamp(int(std::lround(eye_px->u)), 0, depth.width - 1);
  const int ev = std::clamp(int(std::lround(eye_px->v)), 0, depth.height - 1);
  const EyeLocation eye{*eye_px, backproject(cam, *eye_px, depth.at(eu, ev))};

  GazeVector g;
  if (use_gt_gaze) {
    if (!ann->gaze_point)
      throw Error(ErrorKind::ParseError, "no gaze point annotation for pseudo ground truth");
    const int tu = std::clamp(int(std::lround(ann->gaze_point->u)), 0, depth.width - 1);
    const int tv = std::clamp(int(std::lround(ann->gaze_point->v)), 0, depth.height - 1);
    g = cloud.at(tu, tv) - eye.p3;
  } else {
    g = parse_vec3(gaze_str);
  }

  DecayConfig decay;
  decay.gamma = gamma;
  decay.threshold = threshold;
  const FovHeatmap hm = fov_heatmap(cloud, eye, g, decay, threads);
  io::write_png(out_base + ".png", heatmap_to_png(hm));
  io::write_dpth(out_base + ".dpth", hm);
  const Pixel peak = hm.argmax();
  json j;
  j["argmax"] = {peak.u, peak.v};
  j["png"] = out_base + ".png";
  j["dpth"] = out_base + ".dpth";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_epipolar(const std::string& manifest, const std::string& from, const std::string& to,
                 const std::string& point_str, int samples) {
  const pipeline::LoadedScene scene = pipeline::load_scene(manifest);
  const Camera& cam_from = scene.pack.camera(from);
  const Camera& cam_to = scene.pack.camera(to);
  const Pixel px = parse_pixel(point_str);
  const Mat3 f = fundamental_matrix(cam_from, cam_to);
  json j;
  j["from"] = from;
  j["to"] = to;
  j["point"] = {px.u, px.v};
  const auto seg = epipolar_segment(f, px, cam_to.intrinsics);
  if (!seg) {
    j["hit"] = false;
    j["samples"] = json::array();
  } else {
    j["hit"] = true;
    json arr = json::array();
    for (const Pixel& s : sample_epipolar(*seg, samples)) arr.push_back({s.u, s.v});
    j["samples"] = std::move(arr);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_align_depth(const std::string& rel_path, const std::string& abs_path,
                    const std::string& mask_path, uint64_t seed, int iterations,
                    double threshold_frac, double min_inlier_ratio, int min_pixels) {
  const DepthMap rel = io::read_depth(rel_path);
  const AbsoluteDepthMap abs = io::read_depth(abs_path);
  PixelMask mask(rel.width, rel.height, true);
  if (!mask_path.empty()) {
    const io::Image8 img = io::read_png(mask_path);
    if (img.width != rel.width || img.height != rel.height)
      throw Error(ErrorKind::ShapeMismatch, "mask size does not match depth map");
    for (int v = 0; v < img.height; ++v)
      for (int u = 0; u < img.width; ++u) mask.set(u, v, img.at(u, v, 0) > 127);
  }
  RansacConfig cfg;
  cfg.seed = seed;
  cfg.iterations = iterations;
  cfg.threshold_frac_of_median = threshold_frac;
  cfg.min_inlier_ratio = min_inlier_ratio;
  cfg.min_inlier_pixels = min_pixels;
  const ScaleShift fit = ransac_scale_shift(rel, abs, mask, cfg);
  json j;
  j["a"] = fit.a;
  j["b"] = fit.b;
  j["inlier_count"] = fit.inlier_count;
  j["inlier_rms"] = fit.inlier_rms;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_select(const std::string& pred1, const std::string& pred2, const std::string& cam1_path,
               const std::string& cam2_path) {
  const GazePrediction p1 = load_prediction(pred1);
  const GazePrediction p2 = load_prediction(pred2);
  std::ifstream c1(cam1_path), c2(cam2_path);
  if (!c1 || !c2) throw Error(ErrorKind::IoError, "cannot open camera files");
  std::stringstream s1, s2;
  s1 << c1.rdbuf();
  s2 << c2.rdbuf();
  const Camera cam1 = camera_from_json(s1.str());
  const Camera cam2 = camera_from_json(s2.str());
  const SelectionResult sel = select_and_transfer(p1, p2, cam1, cam2);
  json j;
  j["chosen_view"] = sel.chosen_view;
  j["sigma"] = sel.chosen_sigma;
  j["g_primary"] = vec3_json(sel.g_primary);
  j["g_reference"] = vec3_json(sel.g_reference);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, const std::string& out_csv,
             const std::string& out_json) {
  std::ifstream pis(pred_path), gis(gt_path);
  if (!pis) throw Error(ErrorKind::IoError, "cannot open " + pred_path);
  if (!gis) throw Error(ErrorKind::IoError, "cannot open " + gt_path);
  const json preds = json::parse(pis);
  const json gts = json::parse(gis);

  std::map<std::pair<std::string, std::string>, const json*> gt_index;
  for (const auto& g : gts)
    gt_index[{g.at("primary_image_id").get<std::string>(),
              g.value("reference_camera_id", std::string())}] = &g;

  std::vector<EvalRecord> records;
  for (const auto& p : preds) {
    EvalRecord rec;
    rec.primary_image_id = p.at("primary_image_id").get<std::string>();
    rec.reference_camera_id = p.value("reference_camera_id", std::string());
    const auto it = gt_index.find({rec.primary_image_id, rec.reference_camera_id});
    if (it == gt_index.end())
      throw Error(ErrorKind::ParseError, "no ground truth for " + rec.primary_image_id);
    const json& g = *it->second;
    const auto pt = p.at("point").get<std::vector<double>>();
    rec.predicted_point = Vec2(pt[0], pt[1]);
    rec.p_in = p.at("p_in").get<double>();
    rec.gt_in = g.at("gt_in").get<bool>();
    if (g.contains("gt_point")) {
      const auto gp = g.at("gt_point").get<std::vector<double>>();
      rec.gt_point = Vec2(gp[0], gp[1]);
    }
    rec.category = [&]() {
      const std::string c = g.value("category", "HV-TV");
      if (c == "HV-TV") return PairCategory::HV_TV;
      if (c == "HV-TN") return PairCategory::HV_TN;
      if (c == "HN-TV") return PairCategory::HN_TV;
      if (c == "HN-TN") return PairCategory::HN_TN;
      throw Error(ErrorKind::ParseError, "unknown category " + c);
    }();
    if (p.contains("pred_gaze")) {
      const auto v = p.at("pred_gaze").get<std::vector<double>>();
      rec.predicted_gaze = Vec3(v[0], v[1], v[2]);
    }
    if (g.contains("gt_gaze")) {
      const auto v = g.at("gt_gaze").get<std::vector<double>>();
      rec.gt_gaze = Vec3(v[0], v[1], v[2]);
    }
    records.push_back(std::move(rec));
  }

  const MetricsReport report = aggregate_by_primary(records);
  std::ofstream os(out_csv);
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + out_csv);
  os << report.to_csv();
  if (!out_json.empty()) {
    std::ofstream js(out_json);
    js << report.to_json() << "\n";
  }
  std::cout << report.to_csv();
  return 0;
}

int run_train_toy(const std::vector<std::string>& manifests, int steps, int batch, double lr,
                  uint64_t seed, int max_pairs, const std::string& mode_str, double alpha,
                  double beta, double lambda, int threads, const std::string& ckpt_path,
                  const std::string& loss_csv) {
  std::vector<pipeline::LoadedScene> scenes;
  for (const auto& m : manifests) scenes.push_back(pipeline::load_scene(m));

  pipeline::DatasetOptions opts;
  opts.model.loss_alpha = alpha;
  opts.model.loss_beta = beta;
  opts.model.loss_lambda = lambda;
  opts.pair_mode = mode_str == "cross_view" ? PairKind::CrossView : PairKind::Standard;
  opts.max_pairs = max_pairs;
  opts.ransac_seed = seed;

  pipeline::EsaGeometryCache esa_cache;
  const auto pairs = pipeline::prepare_pairs(scenes, opts, esa_cache);
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no training pairs in the manifests");

  nn::ToyModel model(opts.model, seed);
  pipeline::TrainConfig tc;
  tc.steps = steps;
  tc.batch = batch;
  tc.lr = lr;
  tc.seed = seed;
  tc.threads = threads;
  const pipeline::TrainResult result = pipeline::train_toy(model, pairs, tc);

  if (!ckpt_path.empty()) nn::save_checkpoint(model, ckpt_path);
  if (!loss_csv.empty()) {
    std::ofstream os(loss_csv);
    os << "step,batch_loss\n";
    os.precision(12);
    for (size_t i = 0; i < result.step_loss.size(); ++i)
      os << (i + 1) << "," << result.step_loss[i] << "\n";
  }
  json j;
  j["pairs"] = pairs.size();
  j["steps"] = steps;
  j["full_loss_after_step1"] = result.full_loss_after_step1;
  j["full_loss_final"] = result.full_loss_final;
  j["reduction"] = 1.0 - result.full_loss_final / result.full_loss_after_step1;
  if (!ckpt_path.empty()) j["checkpoint"] = ckpt_path;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_infer(const std::string& ckpt_path, const std::string& manifest, int instant,
              const std::string& primary, const std::string& reference, bool cross_view,
              uint64_t seed, int threads, const std::string& out_json,
              const std::string& heatmap_png) {
  const pipeline::LoadedScene scene = pipeline::load_scene(manifest);
  pipeline::DatasetOptions opts;
  opts.pair_mode = cross_view ? PairKind::CrossView : PairKind::Standard;
  opts.ransac_seed = seed;

  const Frame* frame = nullptr;
  for (const Frame& f : scene.pack.frames)
    if (f.instant == instant) frame = &f;
  if (!frame) throw Error(ErrorKind::UnknownScene, "no such instant in manifest");

  // Build the requested pair directly from the frame annotations.
  pipeline::EsaGeometryCache esa_cache;
  std::vector<pipeline::PreparedPair> pairs;
  {
    std::vector<pipeline::LoadedScene> single{scene};
    pipeline::DatasetOptions all = opts;
    all.max_pairs = 0;
    for (auto& pair : pipeline::prepare_pairs(single, all, esa_cache)) {
      if (pair.view[0]->ann.camera_id == primary && pair.view[1]->ann.camera_id == reference)
        pairs.push_back(std::move(pair));
    }
  }
  std::erase_if(pairs, [&](const pipeline::PreparedPair& p) {
    return p.view[0]->ann.image_id.find("_t" + std::to_string(instant) + "_") ==
           std::string::npos;
  });
  if (pairs.empty())
    throw Error(ErrorKind::UnknownScene,
                "the requested pair is not admissible in this mode (check head visibility)");
  const pipeline::PreparedPair& pair = pairs.front();

  nn::ToyModel model(opts.model, 0);
  nn::load_checkpoint(model, ckpt_path);
  const pipeline::PairEvaluation ev = pipeline::evaluate_pair(model, pair, threads);
  if (!ev.decoded[0]) throw Error(ErrorKind::EmptyInput, "primary view was not decoded");

  const Vec2 point = decode_heatmap(ev.outputs[0].heatmap);
  json j;
  j["point"] = {point.x(), point.y()};
  j["p_in"] = ev.outputs[0].p_in;
  j["sigma_primary"] = cross_view ? json(nullptr) : json(ev.pred[0].sigma);
  j["sigma_reference"] = ev.pred[1].sigma;
  j["chosen_view"] = ev.selection.chosen_view;
  if (!heatmap_png.empty()) io::write_png(heatmap_png, heatmap_to_png(ev.outputs[0].heatmap));
  if (!out_json.empty()) {
    std::ofstream os(out_json);
    os << j.dump(2) << "\n";
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view gaze target estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON file whose values override flags");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic multi-camera scene");
  uint64_t synth_seed = 0;
  int synth_cams = 6, synth_w = 512, synth_h = 384, synth_occ = 2, synth_instants = 1;
  double synth_radius = 0.09, synth_jitter = 0.0;
  std::string synth_out;
  synth_cmd->add_option("--seed", synth_seed, "Generator seed")->required();
  synth_cmd->add_option("--cameras", synth_cams, "Camera count (>=2)");
  synth_cmd->add_option("--width", synth_w, "Image width");
  synth_cmd->add_option("--height", synth_h, "Image height");
  synth_cmd->add_option("--occluders", synth_occ, "Occluder box count");
  synth_cmd->add_option("--instants", synth_instants, "Capture instants");
  synth_cmd->add_option("--head-radius", synth_radius, "Head sphere radius (m)");
  synth_cmd->add_option("--pixel-jitter", synth_jitter, "Annotation pixel noise (std)");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  // fov
  auto* fov_cmd = app.add_subcommand("fov", "FoV heatmap from a manifest view");
  std::string fov_manifest, fov_camera, fov_gaze, fov_out;
  bool fov_use_gt = false;
  int fov_instant = 0, fov_threads = 0;
  double fov_gamma = 10.0, fov_threshold = 0.9;
  fov_cmd->add_option("--manifest", fov_manifest, "Scene manifest")->required();
  fov_cmd->add_option("--instant", fov_instant, "Capture instant");
  fov_cmd->add_option("--camera", fov_camera, "Camera id")->required();
  fov_cmd->add_option("--gaze", fov_gaze, "Gaze vector 'gx,gy,gz' in the camera frame");
  fov_cmd->add_flag("--use-gt-gaze", fov_use_gt, "Use the pseudo GT gaze from the annotation");
  fov_cmd->add_option("--gamma", fov_gamma, "Decay strength");
  fov_cmd->add_option("--decay-threshold", fov_threshold, "Decay threshold");
  fov_cmd->add_option("--threads", fov_threads, "Worker threads (default 1 or MVGAZE_THREADS)");
  fov_cmd->add_option("--out", fov_out, "Output base path (writes .png and .dpth)")->required();

  // epipolar
  auto* epi_cmd = app.add_subcommand("epipolar", "Sample the epipolar line of a pixel");
  std::string epi_manifest, epi_from, epi_to, epi_point;
  int epi_samples = kEpipolarSampleCount;
  epi_cmd->add_option("--manifest", epi_manifest, "Scene manifest")->required();
  epi_cmd->add_option("--from", epi_from, "Query camera id")->required();
  epi_cmd->add_option("--to", epi_to, "Target camera id")->required();
  epi_cmd->add_option("--point", epi_point, "Query pixel 'u,v'")->required();
  epi_cmd->add_option("--samples", epi_samples, "Sample count");

  // align-depth
  auto* align_cmd = app.add_subcommand("align-depth", "RANSAC scale/shift depth alignment");
  std::string align_rel, align_abs, align_mask;
  uint64_t align_seed = 0;
  int align_iters = 500, align_min_px = 100;
  double align_thresh = 0.02, align_ratio = 0.3;
  align_cmd->add_option("--rel", align_rel, "Relative depth DPTH")->required();
  align_cmd->add_option("--abs", align_abs, "Absolute reference DPTH")->required();
  align_cmd->add_option("--mask", align_mask, "Mask PNG (nonzero = use pixel)");
  align_cmd->add_option("--seed", align_seed, "RANSAC seed")->required();
  align_cmd->add_option("--iterations", align_iters, "RANSAC iterations");
  align_cmd->add_option("--threshold-frac", align_thresh,
                        "Inlier threshold as a fraction of the median reference depth");
  align_cmd->add_option("--min-inlier-ratio", align_ratio, "Consensus failure threshold");
  align_cmd->add_option("--min-pixels", align_min_px, "Minimum unmasked pixels");

  // select
  auto* select_cmd = app.add_subcommand("select", "Uncertainty-based gaze selection");
  std::string sel_pred1, sel_pred2, sel_cam1, sel_cam2;
  select_cmd->add_option("--pred1", sel_pred1, "Primary prediction JSON")->required();
  select_cmd->add_option("--pred2", sel_pred2, "Reference prediction JSON")->required();
  select_cmd->add_option("--camera1", sel_cam1, "Primary camera JSON")->required();
  select_cmd->add_option("--camera2", sel_cam2, "Reference camera JSON")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Metrics report from prediction/GT files");
  std::string eval_pred, eval_gt, eval_csv, eval_json;
  eval_cmd->add_option("--pred", eval_pred, "Predictions JSON")->required();
  eval_cmd->add_option("--gt", eval_gt, "Ground-truth JSON")->required();
  eval_cmd->add_option("--out", eval_csv, "Report CSV path")->required();
  eval_cmd->add_option("--json", eval_json, "Optional JSON mirror path");

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy model on synthetic scenes");
  std::vector<std::string> train_manifests;
  int train_steps = 200, train_batch = 16, train_pairs = 0, train_threads = 0;
  double train_lr = 0.05, train_alpha = 10.0, train_beta = 0.3, train_lambda = 0.1;
  uint64_t train_seed = 0;
  std::string train_mode = "standard", train_ckpt, train_csv;
  train_cmd->add_option("--manifest", train_manifests, "Scene manifest(s)")->required();
  train_cmd->add_option("--steps", train_steps, "Optimizer steps");
  train_cmd->add_option("--batch", train_batch, "Mini-batch size");
  train_cmd->add_option("--lr", train_lr, "Gradient-descent step size");
  train_cmd->add_option("--seed", train_seed, "Training seed")->required();
  train_cmd->add_option("--pairs", train_pairs, "Cap on training pairs (0 = all)");
  train_cmd->add_option("--mode", train_mode, "standard | cross_view");
  train_cmd->add_option("--alpha", train_alpha, "Heatmap loss weight");
  train_cmd->add_option("--beta", train_beta, "In/out loss weight");
  train_cmd->add_option("--lambda", train_lambda, "Gaze loss weight");
  train_cmd->add_option("--threads", train_threads, "Worker threads");
  train_cmd->add_option("--out", train_ckpt, "Checkpoint output path");
  train_cmd->add_option("--loss-csv", train_csv, "Loss curve CSV path");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Run a checkpoint on one view pair");
  std::string infer_ckpt, infer_manifest, infer_primary, infer_reference, infer_json,
      infer_heatmap;
  int infer_instant = 0, infer_threads = 0;
  bool infer_cross = false;
  uint64_t infer_seed = 0;
  infer_cmd->add_option("--ckpt", infer_ckpt, "Checkpoint path")->required();
  infer_cmd->add_option("--manifest", infer_manifest, "Scene manifest")->required();
  infer_cmd->add_option("--instant", infer_instant, "Capture instant");
  infer_cmd->add_option("--primary", infer_primary, "Primary camera id")->required();
  infer_cmd->add_option("--reference", infer_reference, "Reference camera id")->required();
  infer_cmd->add_flag("--cross-view", infer_cross, "Cross-view mode (absolute-depth transfer)");
  infer_cmd->add_option("--seed", infer_seed, "RANSAC seed for cross-view alignment");
  infer_cmd->add_option("--threads", infer_threads, "Worker threads");
  infer_cmd->add_option("--out", infer_json, "Output JSON path");
  infer_cmd->add_option("--heatmap", infer_heatmap, "Heatmap PNG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth_cmd) {
      apply_config_overrides(
          config_path,
          {{"seed", [&](const json& v) { synth_seed = v.get<uint64_t>(); }},
           {"cameras", [&](const json& v) { synth_cams = v.get<int>(); }},
           {"width", [&](const json& v) { synth_w = v.get<int>(); }},
           {"height", [&](const json& v) { synth_h = v.get<int>(); }},
           {"occluders", [&](const json& v) { synth_occ = v.get<int>(); }},
           {"instants", [&](const json& v) { synth_instants = v.get<int>(); }}});
      return run_synth(synth_seed, synth_cams, synth_w, synth_h, synth_occ, synth_instants,
                       synth_radius, synth_jitter, synth_out);
    }
    if (*fov_cmd) {
      if (!fov_use_gt && fov_gaze.empty())
        throw Error(ErrorKind::ParseError, "need --gaze or --use-gt-gaze");
      return run_fov(fov_manifest, fov_instant, fov_camera, fov_gaze, fov_use_gt, fov_gamma,
                     fov_threshold, fov_threads, fov_out);
    }
    if (*epi_cmd) return run_epipolar(epi_manifest, epi_from, epi_to, epi_point, epi_samples);
    if (*align_cmd) {
      apply_config_overrides(
          config_path, {{"iterations", [&](const json& v) { align_iters = v.get<int>(); }},
                        {"threshold_frac", [&](const json& v) { align_thresh = v.get<double>(); }},
                        {"min_inlier_ratio", [&](const json& v) { align_ratio = v.get<double>(); }},
                        {"min_pixels", [&](const json& v) { align_min_px = v.get<int>(); }}});
      return run_align_depth(align_rel, align_abs, align_mask, align_seed, align_iters,
                             align_thresh, align_ratio, align_min_px);
    }
    if (*select_cmd) return run_select(sel_pred1, sel_pred2, sel_cam1, sel_cam2);
    if (*eval_cmd) return run_eval(eval_pred, eval_gt, eval_csv, eval_json);
    if (*train_cmd) {
      apply_config_overrides(
          config_path, {{"steps", [&](const json& v) { train_steps = v.get<int>(); }},
                        {"batch", [&](const json& v) { train_batch = v.get<int>(); }},
                        {"lr", [&](const json& v) { train_lr = v.get<double>(); }},
                        {"alpha", [&](const json& v) { train_alpha = v.get<double>(); }},
                        {"beta", [&](const json& v) { train_beta = v.get<double>(); }},
                        {"lambda", [&](const json& v) { train_lambda = v.get<double>(); }}});
      return run_train_toy(train_manifests, train_steps, train_batch, train_lr, train_seed,
                           train_pairs, train_mode, train_alpha, train_beta, train_lambda,
                           train_threads, train_ckpt, train_csv);
    }
    if (*infer_cmd)
      return run_infer(infer_ckpt, infer_manifest, infer_instant, infer_primary, infer_reference,
                       infer_cross, infer_seed, infer_threads, infer_json, infer_heatmap);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
