#pragma once

#include <utility>
#include <vector>

#include "mvgaze/geometry.hpp"
#include "mvgaze/nn/layers.hpp"

namespace mvgaze::nn {

/// Multi-head scaled dot-product cross-attention projections. d_k must be
/// divisible by head_count.
struct AttentionParams {
  Linear wq, wk, wv, wo;
  int head_count = 1;

  AttentionParams() = default;
  AttentionParams(int d_q_in, int d_kv_in, int d_k, int heads, Rng& rng);

  int d_k() const { return wq.out(); }
  void visit(const std::string& prefix, const ParamVisitor& fn) {
    wq.visit(prefix + ".wq", fn);
    wk.visit(prefix + ".wk", fn);
    wv.visit(prefix + ".wv", fn);
    wo.visit(prefix + ".wo", fn);
  }
};

struct AttentionCache {
  LinearCache cq, ck, cv, co;
  Tensor q, k, v;   // projected tokens
  Tensor attn;      // [heads, nq, nk] softmax rows
  Tensor context;   // [nq, d_k], heads concatenated
};

/// Residual form: out = query_tokens + Wo(Attn(Wq q, Wk kv, Wv kv)).
Tensor cross_attention_forward(const AttentionParams& p, const Tensor& query_tokens,
                               const Tensor& kv_tokens, AttentionCache* cache);

/// Returns (d_query_tokens, d_kv_tokens) and accumulates parameter grads.
std::pair<Tensor, Tensor> cross_attention_backward(AttentionParams& p,
                                                   const AttentionCache& cache,
                                                   const Tensor& d_out);

/// Row softmax with max subtraction; shared by the attention variants.
void softmax_rows(MatMap m);
/// d_logits = a .* (d_a - rowsum(d_a .* a)) computed in place on d_a.
void softmax_backward_rows(ConstMatMap a, MatMap d_a);

// ---- epipolar scene attention ------------------------------------------

/// One epipolar sample location in the other view's token grid, with its
/// bilinear taps resolved.
struct EsaSample {
  int idx[4];
  double w[4];
};

/// Per query token: the resolved samples, empty when the epipolar line
/// misses the other image.
using EsaGeometry = std::vector<std::vector<EsaSample>>;

struct EsaBlock {
  AttentionParams att;  // wq/wk/wv on width d, wo back to d

  EsaBlock() = default;
  EsaBlock(int d, int heads, Rng& rng) : att(d, d, d, heads, rng) {}
  void visit(const std::string& prefix, const ParamVisitor& fn) { att.visit(prefix, fn); }
};

struct EsaCache {
  LinearCache cq, ck, cv;
  Tensor q;                  // [n, d_k]
  Tensor k_grid, v_grid;     // [n2, d_k]
  std::vector<int> hit;      // query tokens with samples
  Tensor k_samp, v_samp;     // [n_hit, S, d_k]
  Tensor attn;               // [n_hit, heads, S]
  Tensor context;            // [n_hit, d_k]
  LinearCache co;
  const EsaGeometry* geometry = nullptr;
};

/// Every query token attends over features bilinearly sampled along its
/// epipolar line in the other view's token grid; tokens whose line misses
/// pass through unchanged.
Tensor esa_forward(const EsaBlock& p, const Tensor& query_tokens, const Tensor& kv_tokens,
                   const EsaGeometry& geometry, EsaCache* cache);

std::pair<Tensor, Tensor> esa_backward(EsaBlock& p, const EsaCache& cache, const Tensor& d_out);

/// Resolves epipolar sample positions between two views at token-grid
/// resolution. Cameras are scaled to the grid size internally.
EsaGeometry esa_geometry(const Camera& cam_from, const Camera& cam_to, int grid_w, int grid_h,
                         int n_samples);

}  // namespace mvgaze::nn
