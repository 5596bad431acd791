#include "mvgaze/nn/model.hpp"

#include <cmath>

namespace mvgaze::nn {

namespace {

/// [C, H, W] feature map -> [H*W, C] token matrix.
Tensor chw_to_tokens(const Tensor& x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor tokens({h * w, c});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h * w; ++i)
      tokens.v[size_t(i) * c + ch] = x.v[size_t(ch) * h * w + i];
  return tokens;
}

Tensor tokens_to_chw(const Tensor& tokens, int c, int h, int w) {
  Tensor x({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h * w; ++i)
      x.v[size_t(ch) * h * w + i] = tokens.v[size_t(i) * c + ch];
  return x;
}

/// Appends the row-major flattened rotation to every token row.
Tensor append_rotation(const Tensor& tokens, const Mat3& r) {
  const int d = tokens.dim(tokens.rank() - 1);
  const int n = int(tokens.numel() / d);
  Tensor out({n, d + 9});
  for (int i = 0; i < n; ++i) {
    for (int col = 0; col < d; ++col)
      out.v[size_t(i) * (d + 9) + col] = tokens.v[size_t(i) * d + col];
    for (int k = 0; k < 9; ++k)
      out.v[size_t(i) * (d + 9) + d + k] = r(k / 3, k % 3);
  }
  return out;
}

Tensor strip_rotation_grad(const Tensor& d_kv, int d) {
  const int n = d_kv.dim(0);
  Tensor out({n, d});
  for (int i = 0; i < n; ++i)
    for (int col = 0; col < d; ++col)
      out.v[size_t(i) * d + col] = d_kv.v[size_t(i) * (d + 9) + col];
  return out;
}

Tensor mean_pool_rows(const Tensor& tokens) {
  const int d = tokens.dim(tokens.rank() - 1);
  const int n = int(tokens.numel() / d);
  Tensor e({d});
  for (int i = 0; i < n; ++i)
    for (int col = 0; col < d; ++col) e.v[size_t(col)] += tokens.v[size_t(i) * d + col];
  for (double& x : e.v) x /= double(n);
  return e;
}

void add_pool_grad(Tensor& d_tokens, const Tensor& d_e, int n) {
  const int d = int(d_e.numel());
  for (int i = 0; i < n; ++i)
    for (int col = 0; col < d; ++col)
      d_tokens.v[size_t(i) * d + col] += d_e.v[size_t(col)] / double(n);
}

}  // namespace

// ---- HIA -------------------------------------------------------------------

HiaResult hia_forward(const HiaParams& p, const Tensor& f1, const Tensor& f2, const Mat3& r21,
                      const Mat3& r12, HiaCache* cache) {
  const Mat3 check = r21 * r12;
  if ((check - Mat3::Identity()).norm() > 1e-6)
    throw Error(ErrorKind::ShapeMismatch, "r21 and r12 must be mutual inverses");
  HiaCache local;
  HiaCache* c = cache ? cache : &local;
  const int d = p.att.wq.in();
  c->n1 = int(f1.numel() / d);
  c->n2 = int(f2.numel() / d);

  const Tensor kv_for_1 = append_rotation(f2, r21);
  const Tensor kv_for_2 = append_rotation(f1, r12);
  HiaResult out;
  out.f1_enhanced = cross_attention_forward(p.att, f1, kv_for_1, &c->att1);
  out.f2_enhanced = cross_attention_forward(p.att, f2, kv_for_2, &c->att2);
  out.e1 = mean_pool_rows(out.f1_enhanced);
  out.e2 = mean_pool_rows(out.f2_enhanced);
  return out;
}

std::pair<Tensor, Tensor> hia_backward(HiaParams& p, const HiaCache& cache, const Tensor& d_f1,
                                       const Tensor& d_f2, const Tensor& d_e1,
                                       const Tensor& d_e2) {
  const int d = p.att.wq.in();
  Tensor d_f1e({cache.n1, d}), d_f2e({cache.n2, d});
  if (d_f1.numel() > 0)
    for (size_t i = 0; i < d_f1e.v.size(); ++i) d_f1e.v[i] = d_f1.v[i];
  if (d_f2.numel() > 0)
    for (size_t i = 0; i < d_f2e.v.size(); ++i) d_f2e.v[i] = d_f2.v[i];
  if (d_e1.numel() > 0) add_pool_grad(d_f1e, d_e1, cache.n1);
  if (d_e2.numel() > 0) add_pool_grad(d_f2e, d_e2, cache.n2);

  auto [d_f1_q, d_kv_for_1] = cross_attention_backward(p.att, cache.att1, d_f1e);
  auto [d_f2_q, d_kv_for_2] = cross_attention_backward(p.att, cache.att2, d_f2e);

  Tensor d_f1_total = d_f1_q;
  const Tensor from_kv2 = strip_rotation_grad(d_kv_for_2, d);
  for (size_t i = 0; i < d_f1_total.v.size(); ++i) d_f1_total.v[i] += from_kv2.v[i];
  Tensor d_f2_total = d_f2_q;
  const Tensor from_kv1 = strip_rotation_grad(d_kv_for_1, d);
  for (size_t i = 0; i < d_f2_total.v.size(); ++i) d_f2_total.v[i] += from_kv1.v[i];
  return {std::move(d_f1_total), std::move(d_f2_total)};
}

// ---- gaze head ---------------------------------------------------------

GazeOut gaze_head_forward(const GazeHead& p, const Tensor& e_h, GazeHeadCache* cache) {
  GazeHeadCache local;
  GazeHeadCache* c = cache ? cache : &local;
  const Tensor raw = mlp2_forward(p.mlp, e_h, &c->mlp);
  GazeOut out;
  out.g = Vec3(raw.v[0], raw.v[1], raw.v[2] + 1.0);
  out.log_sigma = raw.v[3];
  out.sigma = std::exp(out.log_sigma);
  return out;
}

Tensor gaze_head_backward(GazeHead& p, const GazeHeadCache& cache, const Vec3& d_g,
                          double d_log_sigma) {
  Tensor d_raw({4});
  d_raw.v = {d_g.x(), d_g.y(), d_g.z(), d_log_sigma};
  return mlp2_backward(p.mlp, cache.mlp, d_raw);
}

// ---- decoder -----------------------------------------------------------

ModelOutputs gaze_decoder_forward(const DecoderParams& p, const Tensor& e_h,
                                  const Vec2& head_center_norm, const Tensor& scene_tokens,
                                  int grid_w, int grid_h, int heatmap_size, int patch,
                                  DecoderCache* cache) {
  DecoderCache local;
  DecoderCache* c = cache ? cache : &local;
  const int d = p.att.wq.in();
  if (e_h.numel() != d || scene_tokens.numel() % d != 0)
    throw Error(ErrorKind::ShapeMismatch, "decoder width mismatch");
  const int n = int(scene_tokens.numel() / d);
  if (n != grid_w * grid_h)
    throw Error(ErrorKind::ShapeMismatch, "scene token count does not match grid");

  Tensor center({2});
  center.v = {head_center_norm.x(), head_center_norm.y()};
  const Tensor e_pos = mlp2_forward(p.pos_mlp, center, &c->pos);
  c->e_tilde = Tensor({d});
  for (int i = 0; i < d; ++i) c->e_tilde.v[size_t(i)] = e_h.v[size_t(i)] + e_pos.v[size_t(i)];

  c->scene = scene_tokens;
  c->scene.shape = {n, d};
  c->e_g = cross_attention_forward(p.att, c->e_tilde, c->scene, &c->att);

  c->modulated = Tensor({n, d});
  for (int i = 0; i < n; ++i)
    for (int col = 0; col < d; ++col)
      c->modulated.v[size_t(i) * d + col] =
          c->scene.v[size_t(i) * d + col] * c->e_g.v[size_t(col)];

  const Tensor patches = linear_forward(p.heatmap_head, c->modulated, &c->hm);
  c->grid_w = grid_w;
  c->grid_h = grid_h;
  Tensor raw({grid_h * patch, grid_w * patch});
  for (int ty = 0; ty < grid_h; ++ty) {
    for (int tx = 0; tx < grid_w; ++tx) {
      const int token = ty * grid_w + tx;
      for (int py = 0; py < patch; ++py)
        for (int px = 0; px < patch; ++px)
          raw.v[size_t((ty * patch + py) * grid_w * patch + tx * patch + px)] =
              patches.v[size_t(token) * patch * patch + py * patch + px];
    }
  }
  const Tensor resized = bilinear_resize(raw, heatmap_size, heatmap_size);

  Tensor io_in({2 * d});
  for (int i = 0; i < d; ++i) {
    io_in.v[size_t(i)] = c->e_tilde.v[size_t(i)];
    io_in.v[size_t(d + i)] = c->e_g.v[size_t(i)];
  }
  const Tensor logit = mlp2_forward(p.io_head, io_in, &c->io);
  c->io_logit = logit.v[0];

  ModelOutputs out;
  out.heatmap = FovHeatmap(heatmap_size, heatmap_size);
  out.heatmap.values = resized.v;
  out.p_in = sigmoid(c->io_logit);
  return out;
}

std::pair<Tensor, Tensor> gaze_decoder_backward(DecoderParams& p, const DecoderCache& cache,
                                                const Tensor& d_heatmap, double d_io_logit) {
  const int d = p.att.wq.in();
  const int n = cache.scene.dim(0);
  const int patch = int(std::lround(std::sqrt(double(p.heatmap_head.out()))));

  Tensor d_e_tilde({d}), d_e_g({d});

  // in/out head
  Tensor d_logit({1});
  d_logit.v[0] = d_io_logit;
  const Tensor d_io_in = mlp2_backward(p.io_head, cache.io, d_logit);
  for (int i = 0; i < d; ++i) {
    d_e_tilde.v[size_t(i)] += d_io_in.v[size_t(i)];
    d_e_g.v[size_t(i)] += d_io_in.v[size_t(d + i)];
  }

  // heatmap head
  Tensor d_scene({n, d});
  if (d_heatmap.numel() > 0) {
    const Tensor d_raw =
        bilinear_resize_backward(d_heatmap, cache.grid_h * patch, cache.grid_w * patch);
    Tensor d_patches({n, patch * patch});
    for (int ty = 0; ty < cache.grid_h; ++ty)
      for (int tx = 0; tx < cache.grid_w; ++tx) {
        const int token = ty * cache.grid_w + tx;
        for (int py = 0; py < patch; ++py)
          for (int px = 0; px < patch; ++px)
            d_patches.v[size_t(token) * patch * patch + py * patch + px] =
                d_raw.v[size_t((ty * patch + py) * cache.grid_w * patch + tx * patch + px)];
      }
    const Tensor d_modulated = linear_backward(p.heatmap_head, cache.hm, d_patches);
    for (int i = 0; i < n; ++i)
      for (int col = 0; col < d; ++col) {
        d_scene.v[size_t(i) * d + col] +=
            d_modulated.v[size_t(i) * d + col] * cache.e_g.v[size_t(col)];
        d_e_g.v[size_t(col)] +=
            d_modulated.v[size_t(i) * d + col] * cache.scene.v[size_t(i) * d + col];
      }
  }

  // gaze-token attention
  auto [d_q, d_kv] = cross_attention_backward(p.att, cache.att, d_e_g);
  for (int i = 0; i < d; ++i) d_e_tilde.v[size_t(i)] += d_q.v[size_t(i)];
  for (size_t i = 0; i < d_scene.v.size(); ++i) d_scene.v[i] += d_kv.v[i];

  // positional MLP; the center coordinate grad is discarded.
  mlp2_backward(p.pos_mlp, cache.pos, d_e_tilde);
  return {std::move(d_scene), std::move(d_e_tilde)};
}

// ---- cross-view head embedding -------------------------------------

Tensor cross_view_head_embedding(const CrossViewTransform& p, const Tensor& e_h2, const Mat3& r21,
                                 CrossViewCache* cache) {
  CrossViewCache local;
  CrossViewCache* c = cache ? cache : &local;
  const int d = int(e_h2.numel());
  Tensor in({d + 9});
  for (int i = 0; i < d; ++i) in.v[size_t(i)] = e_h2.v[size_t(i)];
  for (int k = 0; k < 9; ++k) in.v[size_t(d + k)] = r21(k / 3, k % 3);
  Tensor out = mlp2_forward(p.mlp, in, &c->mlp);
  for (int i = 0; i < d; ++i) out.v[size_t(i)] += p.e_pos_out.v[size_t(i)];
  return out;
}

Tensor cross_view_head_embedding_backward(CrossViewTransform& p, const CrossViewCache& cache,
                                          const Tensor& d_out) {
  p.e_pos_out.ensure_grad();
  for (size_t i = 0; i < p.e_pos_out.g.size(); ++i) p.e_pos_out.g[i] += d_out.v[i];
  const Tensor d_in = mlp2_backward(p.mlp, cache.mlp, d_out);
  const int d = int(d_out.numel());
  Tensor d_e({d});
  for (int i = 0; i < d; ++i) d_e.v[size_t(i)] = d_in.v[size_t(i)];
  return d_e;
}

// ---- targets and losses --------------------------------------------------

FovHeatmap gaussian_target_heatmap(const Pixel& target, double sigma_px, int size) {
  if (!(target.u >= 0.0 && target.u < size && target.v >= 0.0 && target.v < size))
    throw Error(ErrorKind::OutOfBounds, "gaussian target outside heatmap");
  FovHeatmap hm(size, size);
  const double inv = 1.0 / (2.0 * sigma_px * sigma_px);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double du = x - target.u;
      const double dv = y - target.v;
      hm.at(x, y) = std::exp(-(du * du + dv * dv) * inv);
    }
  return hm;
}

double heatmap_mse(const FovHeatmap& pred, const FovHeatmap& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error(ErrorKind::ShapeMismatch, "heatmap size mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    const double d = pred.values[i] - gt.values[i];
    sum += d * d;
  }
  return sum / double(pred.values.size());
}

double total_loss(const std::vector<ModelOutputs>& outputs,
                  const std::vector<std::optional<FovHeatmap>>& gt_heatmaps,
                  const std::vector<bool>& gt_inout, const std::vector<double>& gaze_losses,
                  const TotalLossWeights& w) {
  if (outputs.size() != gt_heatmaps.size() || outputs.size() != gt_inout.size())
    throw Error(ErrorKind::ShapeMismatch, "per-view loss inputs disagree");

  double hm = 0.0;
  int hm_n = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    if (!gt_heatmaps[i]) continue;
    hm += heatmap_mse(outputs[i].heatmap, *gt_heatmaps[i]);
    ++hm_n;
  }
  if (hm_n > 0) hm /= hm_n;

  double io = 0.0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const double p = std::clamp(outputs[i].p_in, 1e-15, 1.0 - 1e-15);
    io += gt_inout[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  io /= double(outputs.size());

  double gaze = 0.0;
  if (!gaze_losses.empty()) {
    for (double l : gaze_losses) gaze += l;
    gaze /= double(gaze_losses.size());
  }
  return w.alpha * hm + w.beta * io + w.lambda * gaze;
}

// ---- full toy model --------------------------------------------------------

ToyModel::ToyModel(const ModelConfig& config, uint64_t seed) : cfg(config) {
  Rng rng(seed);
  head_conv1 = Conv2d(3, cfg.stem_mid, 3, 2, 1, rng);
  head_conv2 = Conv2d(cfg.stem_mid, cfg.d, 3, 2, 1, rng);
  hia = HiaParams(cfg.d, cfg.heads, rng);
  gaze = GazeHead(cfg.d, rng);
  scene_conv1 = Conv2d(5, cfg.stem_mid, 3, 2, 1, rng);
  scene_conv2 = Conv2d(cfg.stem_mid, cfg.d, 3, 2, 1, rng);
  esa1 = EsaBlock(cfg.d, cfg.heads, rng);
  esa2 = EsaBlock(cfg.d, cfg.heads, rng);
  ffn = Mlp2(cfg.d, 2 * cfg.d, cfg.d, rng);
  decoder = DecoderParams(cfg, rng);
  xf = CrossViewTransform(cfg.d, rng);
}

void ToyModel::visit_params(const ParamVisitor& fn) {
  head_conv1.visit("head_stem.conv1", fn);
  head_conv2.visit("head_stem.conv2", fn);
  hia.visit("hia", fn);
  gaze.visit("gaze_head", fn);
  scene_conv1.visit("scene_stem.conv1", fn);
  scene_conv2.visit("scene_stem.conv2", fn);
  esa1.visit("esa1", fn);
  esa2.visit("esa2", fn);
  ffn.visit("ffn", fn);
  decoder.visit("decoder", fn);
  xf.visit("cross_view", fn);
}

void ToyModel::zero_grads() {
  visit_params([](const std::string&, Tensor& t) {
    t.ensure_grad();
    t.zero_grad();
  });
}

void ToyModel::sgd_step(double lr) {
  visit_params([lr](const std::string&, Tensor& t) {
    if (t.g.size() != t.v.size()) return;
    for (size_t i = 0; i < t.v.size(); ++i) t.v[i] -= lr * t.g[i];
    t.zero_grad();
  });
}

int64_t ToyModel::param_count() {
  int64_t n = 0;
  visit_params([&n](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

// ---- pair phases -------------------------------------------------------

namespace {

Tensor head_stem_forward(const ToyModel& m, const Tensor& crop, Conv2dCache* c1, ReluCache* cr,
                         Conv2dCache* c2) {
  const Tensor a = conv2d_forward(m.head_conv1, crop, c1);
  const Tensor b = relu_forward(a, cr);
  const Tensor out = conv2d_forward(m.head_conv2, b, c2);
  return chw_to_tokens(out);
}

Tensor scene_stem_forward(const ToyModel& m, const Tensor& scene, Conv2dCache* c1, ReluCache* cr,
                          Conv2dCache* c2) {
  const Tensor a = conv2d_forward(m.scene_conv1, scene, c1);
  const Tensor b = relu_forward(a, cr);
  const Tensor out = conv2d_forward(m.scene_conv2, b, c2);
  return chw_to_tokens(out);
}

}  // namespace

GazePhase gaze_phase_forward(const ToyModel& m, const PairNetInput& in) {
  GazePhase ph;
  for (int v = 0; v < 2; ++v)
    ph.head_tokens[v] =
        head_stem_forward(m, in.view[v].head_crop, &ph.hcache1[v], &ph.hrelu[v], &ph.hcache2[v]);
  ph.hia_out =
      hia_forward(m.hia, ph.head_tokens[0], ph.head_tokens[1], in.r21, in.r12, &ph.hia);
  ph.gaze[0] = gaze_head_forward(m.gaze, ph.hia_out.e1, &ph.ghead[0]);
  ph.gaze[1] = gaze_head_forward(m.gaze, ph.hia_out.e2, &ph.ghead[1]);
  return ph;
}

void gaze_phase_backward(ToyModel& m, const GazePhase& phase, const Vec3 d_g[2],
                         const double d_log_sigma[2], const Tensor d_e_extra[2]) {
  Tensor d_e[2];
  for (int v = 0; v < 2; ++v) {
    d_e[v] = gaze_head_backward(m.gaze, phase.ghead[v], d_g[v], d_log_sigma[v]);
    if (d_e_extra[v].numel() > 0)
      for (size_t i = 0; i < d_e[v].v.size(); ++i) d_e[v].v[i] += d_e_extra[v].v[i];
  }
  auto [d_t1, d_t2] = hia_backward(m.hia, phase.hia, Tensor(), Tensor(), d_e[0], d_e[1]);
  const Tensor* d_tokens[2] = {&d_t1, &d_t2};
  for (int v = 0; v < 2; ++v) {
    const int gh = m.cfg.head_grid(), gw = m.cfg.head_grid();
    const Tensor d_chw = tokens_to_chw(*d_tokens[v], m.cfg.d, gh, gw);
    const Tensor d_b = conv2d_backward(m.head_conv2, phase.hcache2[v], d_chw);
    const Tensor d_a = relu_backward(phase.hrelu[v], d_b);
    conv2d_backward(m.head_conv1, phase.hcache1[v], d_a);
  }
}

ScenePhase scene_phase_forward(const ToyModel& m, const PairNetInput& in, const Tensor& e1,
                               const Tensor& e2, const Mat3& r21, ForwardMode mode) {
  if (!in.esa_12 || !in.esa_21)
    throw Error(ErrorKind::ShapeMismatch, "scene phase requires epipolar geometry");
  ScenePhase ph;
  ph.mode = mode;
  for (int v = 0; v < 2; ++v)
    ph.tokens0[v] =
        scene_stem_forward(m, in.view[v].scene, &ph.scache1[v], &ph.srelu[v], &ph.scache2[v]);

  // Both ESA directions update from the pre-update tokens.
  ph.after_esa1[0] = esa_forward(m.esa1, ph.tokens0[0], ph.tokens0[1], *in.esa_12, &ph.esa1c[0]);
  ph.after_esa1[1] = esa_forward(m.esa1, ph.tokens0[1], ph.tokens0[0], *in.esa_21, &ph.esa1c[1]);

  for (int v = 0; v < 2; ++v) {
    const Tensor delta = mlp2_forward(m.ffn, ph.after_esa1[v], &ph.ffnc[v]);
    ph.after_ffn[v] = ph.after_esa1[v];
    for (size_t i = 0; i < ph.after_ffn[v].v.size(); ++i) ph.after_ffn[v].v[i] += delta.v[i];
  }

  ph.tokens[0] = esa_forward(m.esa2, ph.after_ffn[0], ph.after_ffn[1], *in.esa_12, &ph.esa2c[0]);
  ph.tokens[1] = esa_forward(m.esa2, ph.after_ffn[1], ph.after_ffn[0], *in.esa_21, &ph.esa2c[1]);

  const int gw = m.cfg.grid_w(), gh = m.cfg.grid_h();
  if (mode == ForwardMode::Standard) {
    const Tensor* embeddings[2] = {&e1, &e2};
    for (int v = 0; v < 2; ++v) {
      ph.outputs[v] = gaze_decoder_forward(m.decoder, *embeddings[v], in.view[v].head_center_norm,
                                           ph.tokens[v], gw, gh, m.cfg.heatmap_size,
                                           m.cfg.heatmap_patch, &ph.dec[v]);
      ph.decoded[v] = true;
    }
  } else {
    const Tensor e_out = cross_view_head_embedding(m.xf, e2, r21, &ph.xf);
    ph.outputs[0] =
        gaze_decoder_forward(m.decoder, e_out, in.view[0].head_center_norm, ph.tokens[0], gw, gh,
                             m.cfg.heatmap_size, m.cfg.heatmap_patch, &ph.dec[0]);
    ph.decoded[0] = true;
  }
  return ph;
}

std::pair<Tensor, Tensor> scene_phase_backward(ToyModel& m, const ScenePhase& phase,
                                               const Tensor d_heatmap[2],
                                               const double d_io_logit[2]) {
  const int d = m.cfg.d;
  Tensor d_e1({d}), d_e2({d});
  Tensor d_tokens[2];
  for (int v = 0; v < 2; ++v) d_tokens[v] = Tensor(phase.tokens[v].shape);

  for (int v = 0; v < 2; ++v) {
    if (!phase.decoded[v]) continue;
    auto [d_scene, d_e_used] =
        gaze_decoder_backward(m.decoder, phase.dec[v], d_heatmap[v], d_io_logit[v]);
    for (size_t i = 0; i < d_tokens[v].v.size(); ++i) d_tokens[v].v[i] += d_scene.v[i];
    if (phase.mode == ForwardMode::Standard) {
      Tensor& dst = v == 0 ? d_e1 : d_e2;
      for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += d_e_used.v[i];
    } else {
      const Tensor d_from_xf = cross_view_head_embedding_backward(m.xf, phase.xf, d_e_used);
      for (size_t i = 0; i < d_e2.v.size(); ++i) d_e2.v[i] += d_from_xf.v[i];
    }
  }

  // ESA2 (parallel directions, shared params)
  auto [d_ffn0_q, d_ffn1_kv] = esa_backward(m.esa2, phase.esa2c[0], d_tokens[0]);
  auto [d_ffn1_q, d_ffn0_kv] = esa_backward(m.esa2, phase.esa2c[1], d_tokens[1]);
  Tensor d_after_ffn[2] = {d_ffn0_q, d_ffn1_q};
  for (size_t i = 0; i < d_after_ffn[0].v.size(); ++i) d_after_ffn[0].v[i] += d_ffn0_kv.v[i];
  for (size_t i = 0; i < d_after_ffn[1].v.size(); ++i) d_after_ffn[1].v[i] += d_ffn1_kv.v[i];

  // residual FFN
  Tensor d_after_esa1[2];
  for (int v = 0; v < 2; ++v) {
    const Tensor d_mlp_in = mlp2_backward(m.ffn, phase.ffnc[v], d_after_ffn[v]);
    d_after_esa1[v] = d_after_ffn[v];
    for (size_t i = 0; i < d_after_esa1[v].v.size(); ++i) d_after_esa1[v].v[i] += d_mlp_in.v[i];
  }

  // ESA1
  auto [d_tok0_q, d_tok1_kv] = esa_backward(m.esa1, phase.esa1c[0], d_after_esa1[0]);
  auto [d_tok1_q, d_tok0_kv] = esa_backward(m.esa1, phase.esa1c[1], d_after_esa1[1]);
  Tensor d_tokens0[2] = {d_tok0_q, d_tok1_q};
  for (size_t i = 0; i < d_tokens0[0].v.size(); ++i) d_tokens0[0].v[i] += d_tok0_kv.v[i];
  for (size_t i = 0; i < d_tokens0[1].v.size(); ++i) d_tokens0[1].v[i] += d_tok1_kv.v[i];

  for (int v = 0; v < 2; ++v) {
    const Tensor d_chw = tokens_to_chw(d_tokens0[v], m.cfg.d, m.cfg.grid_h(), m.cfg.grid_w());
    const Tensor d_b = conv2d_backward(m.scene_conv2, phase.scache2[v], d_chw);
    const Tensor d_a = relu_backward(phase.srelu[v], d_b);
    conv2d_backward(m.scene_conv1, phase.scache1[v], d_a);
  }
  return {std::move(d_e1), std::move(d_e2)};
}

}  // namespace mvgaze::nn
