#pragma once

#include <optional>

#include "mvgaze/gaze_field.hpp"
#include "mvgaze/nn/attention.hpp"

namespace mvgaze::nn {

struct ModelConfig {
  int d = 32;
  int heads = 2;
  int stem_mid = 16;
  int head_crop = 32;  // head crop side fed to the head stem
  int scene_in_w = 64;
  int scene_in_h = 48;
  int esa_samples = kEpipolarSampleCount;
  int heatmap_size = 64;
  int heatmap_patch = 4;  // per-token output patch side
  double gaussian_sigma_px = 3.0;
  double loss_alpha = 10.0;
  double loss_beta = 0.3;
  double loss_lambda = 0.1;
  DecayConfig decay{};

  // Both stems downsample by 4.
  int grid_w() const { return scene_in_w / 4; }
  int grid_h() const { return scene_in_h / 4; }
  int head_grid() const { return head_crop / 4; }
};

// ---- HIA -------------------------------------------------------------------

/// Head-attention projections; keys/values are widened by the flattened 3x3
/// relative rotation appended to every token.
struct HiaParams {
  AttentionParams att;

  HiaParams() = default;
  HiaParams(int d, int heads, Rng& rng) : att(d, d + 9, d, heads, rng) {}
  void visit(const std::string& prefix, const ParamVisitor& fn) { att.visit(prefix, fn); }
};

struct HiaResult {
  Tensor f1_enhanced, f2_enhanced;  // [n, d]
  Tensor e1, e2;                    // [d], token-mean pooled
};

struct HiaCache {
  AttentionCache att1, att2;
  int n1 = 0, n2 = 0;
};

/// Symmetric cross-view head attention with shared projections:
///   F1' = F1 + CrossAtt(Q(F1), K(F2 ++ R21), V(F2 ++ R21)), and mirrored.
HiaResult hia_forward(const HiaParams& p, const Tensor& f1, const Tensor& f2, const Mat3& r21,
                      const Mat3& r12, HiaCache* cache);

/// Consumes grads of both enhanced token sets and pooled embeddings.
std::pair<Tensor, Tensor> hia_backward(HiaParams& p, const HiaCache& cache, const Tensor& d_f1,
                                       const Tensor& d_f2, const Tensor& d_e1, const Tensor& d_e2);

// ---- gaze head ---------------------------------------------------------

struct GazeHead {
  Mlp2 mlp;  // d -> d -> 4 (gaze xyz + log sigma)

  GazeHead() = default;
  GazeHead(int d, Rng& rng) : mlp(d, d, 4, rng) {}
  void visit(const std::string& prefix, const ParamVisitor& fn) { mlp.visit(prefix, fn); }
};

struct GazeHeadCache {
  Mlp2Cache mlp;
};

struct GazeOut {
  Vec3 g = Vec3::Zero();
  double log_sigma = 0.0;
  double sigma = 1.0;
};

/// g carries a fixed +z offset so a zero-initialized head starts at the
/// optical axis instead of the unstable zero vector.
GazeOut gaze_head_forward(const GazeHead& p, const Tensor& e_h, GazeHeadCache* cache);
Tensor gaze_head_backward(GazeHead& p, const GazeHeadCache& cache, const Vec3& d_g,
                          double d_log_sigma);

// ---- decoder -----------------------------------------------------------

struct DecoderParams {
  Mlp2 pos_mlp;         // normalized head center (2) -> d
  AttentionParams att;  // gaze token query over scene tokens
  Linear heatmap_head;  // d -> patch^2
  Mlp2 io_head;         // 2d -> d -> 1 logit

  DecoderParams() = default;
  DecoderParams(const ModelConfig& cfg, Rng& rng)
      : pos_mlp(2, cfg.d, cfg.d, rng),
        att(cfg.d, cfg.d, cfg.d, cfg.heads, rng),
        heatmap_head(cfg.d, cfg.heatmap_patch * cfg.heatmap_patch, rng),
        io_head(2 * cfg.d, cfg.d, 1, rng) {}
  void visit(const std::string& prefix, const ParamVisitor& fn) {
    pos_mlp.visit(prefix + ".pos_mlp", fn);
    att.visit(prefix + ".att", fn);
    heatmap_head.visit(prefix + ".heatmap_head", fn);
    io_head.visit(prefix + ".io_head", fn);
  }
};

struct ModelOutputs {
  FovHeatmap heatmap;  // heatmap_size x heatmap_size
  double p_in = 0.5;
};

struct DecoderCache {
  Mlp2Cache pos;
  Tensor e_tilde;  // [d]
  AttentionCache att;
  Tensor e_g;        // [d]
  Tensor scene;      // [n, d]
  Tensor modulated;  // [n, d]
  LinearCache hm;
  int grid_w = 0, grid_h = 0;
  Mlp2Cache io;
  double io_logit = 0.0;
};

ModelOutputs gaze_decoder_forward(const DecoderParams& p, const Tensor& e_h,
                                  const Vec2& head_center_norm, const Tensor& scene_tokens,
                                  int grid_w, int grid_h, int heatmap_size, int patch,
                                  DecoderCache* cache);

/// Returns (d_scene_tokens, d_e_h).
std::pair<Tensor, Tensor> gaze_decoder_backward(DecoderParams& p, const DecoderCache& cache,
                                                const Tensor& d_heatmap, double d_io_logit);

// ---- cross-view head embedding -------------------------------------

struct CrossViewTransform {
  Mlp2 mlp;          // (d + 9) -> d -> d
  Tensor e_pos_out;  // learnable outside embedding [d]

  CrossViewTransform() = default;
  CrossViewTransform(int d, Rng& rng) : mlp(d + 9, d, d, rng), e_pos_out({d}) {
    init_normal(e_pos_out, rng, 0.02);
  }
  void visit(const std::string& prefix, const ParamVisitor& fn) {
    mlp.visit(prefix + ".mlp", fn);
    fn(prefix + ".e_pos_out", e_pos_out);
  }
};

struct CrossViewCache {
  Mlp2Cache mlp;
};

Tensor cross_view_head_embedding(const CrossViewTransform& p, const Tensor& e_h2, const Mat3& r21,
                                 CrossViewCache* cache);
Tensor cross_view_head_embedding_backward(CrossViewTransform& p, const CrossViewCache& cache,
                                          const Tensor& d_out);

// ---- targets and losses --------------------------------------------------

/// Unnormalized Gaussian with peak 1 at the target, sampled on the integer
/// pixel grid of a size x size map.
FovHeatmap gaussian_target_heatmap(const Pixel& target, double sigma_px, int size = 64);

double heatmap_mse(const FovHeatmap& pred, const FovHeatmap& gt);

struct TotalLossWeights {
  double alpha = 10.0;
  double beta = 0.3;
  double lambda = 0.1;
};

/// alpha * L_hm + beta * L_io + lambda * L_gaze, each term averaged over the
/// views that define it. gt_heatmaps entries may be absent (out-of-frame
/// targets contribute no heatmap loss).
double total_loss(const std::vector<ModelOutputs>& outputs,
                  const std::vector<std::optional<FovHeatmap>>& gt_heatmaps,
                  const std::vector<bool>& gt_inout, const std::vector<double>& gaze_losses,
                  const TotalLossWeights& w);

// ---- full toy model --------------------------------------------------------

struct ToyModel {
  ModelConfig cfg;
  Conv2d head_conv1, head_conv2;  // shared head stem
  HiaParams hia;
  GazeHead gaze;
  Conv2d scene_conv1, scene_conv2;  // shared scene stem
  EsaBlock esa1, esa2;
  Mlp2 ffn;  // residual token MLP between the ESA blocks
  DecoderParams decoder;
  CrossViewTransform xf;

  ToyModel(const ModelConfig& config, uint64_t seed);

  void visit_params(const ParamVisitor& fn);
  void zero_grads();
  void sgd_step(double lr);
  int64_t param_count();
};

enum class ForwardMode { Standard, CrossView };

struct ViewNetInput {
  Tensor head_crop;  // [3, hc, hc]; zeros when the head is absent
  bool head_present = false;
  Vec2 head_center_norm = Vec2(0.5, 0.5);
  Tensor scene;  // [5, H, W]: RGB, head mask, FoV prior
};

struct PairNetInput {
  ViewNetInput view[2];
  Mat3 r21 = Mat3::Identity();  // reference -> primary rotation
  Mat3 r12 = Mat3::Identity();
  const EsaGeometry* esa_12 = nullptr;  // view-1 queries into view-2 grid
  const EsaGeometry* esa_21 = nullptr;
};

struct GazePhase {
  Conv2dCache hcache1[2], hcache2[2];
  ReluCache hrelu[2];
  Tensor head_tokens[2];
  HiaCache hia;
  HiaResult hia_out;
  GazeHeadCache ghead[2];
  GazeOut gaze[2];
};

GazePhase gaze_phase_forward(const ToyModel& m, const PairNetInput& in);

/// d_e_extra: additional downstream grads on the pooled embeddings (from the
/// decoder path); may be empty tensors.
void gaze_phase_backward(ToyModel& m, const GazePhase& phase, const Vec3 d_g[2],
                         const double d_log_sigma[2], const Tensor d_e_extra[2]);

struct ScenePhase {
  Conv2dCache scache1[2], scache2[2];
  ReluCache srelu[2];
  Tensor tokens0[2];     // stem outputs [n, d]
  EsaCache esa1c[2];
  Tensor after_esa1[2];
  Mlp2Cache ffnc[2];
  Tensor after_ffn[2];
  EsaCache esa2c[2];
  Tensor tokens[2];  // final scene features
  DecoderCache dec[2];
  CrossViewCache xf;
  ForwardMode mode = ForwardMode::Standard;
  bool decoded[2] = {false, false};
  ModelOutputs outputs[2];
};

/// Runs stems + dual ESA + FFN + decoders. In CrossView mode only the
/// primary view is decoded, with its head embedding produced by the
/// feature-transform module from the reference embedding.
ScenePhase scene_phase_forward(const ToyModel& m, const PairNetInput& in, const Tensor& e1,
                               const Tensor& e2, const Mat3& r21, ForwardMode mode);

/// d_heatmap/d_io_logit per view (ignored for undecoded views). Returns the
/// gradients w.r.t. the pooled head embeddings (e1, e2).
std::pair<Tensor, Tensor> scene_phase_backward(ToyModel& m, const ScenePhase& phase,
                                               const Tensor d_heatmap[2],
                                               const double d_io_logit[2]);

}  // namespace mvgaze::nn
