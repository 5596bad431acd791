#pragma once

#include <functional>
#include <string>

#include "mvgaze/nn/tensor.hpp"

namespace mvgaze::nn {

/// Enumerates (name, tensor) for checkpointing, finite-difference sweeps and
/// optimizer steps.
using ParamVisitor = std::function<void(const std::string&, Tensor&)>;

// ---- linear ----------------------------------------------------------------

struct Linear {
  Tensor W;  // [out, in]
  Tensor b;  // [out]

  Linear() = default;
  Linear(int in, int out, Rng& rng);

  int in() const { return W.dim(1); }
  int out() const { return W.dim(0); }
  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".W", W);
    fn(prefix + ".b", b);
  }
};

struct LinearCache {
  Tensor x;
};

/// x viewed as [n, in] -> [n, out].
Tensor linear_forward(const Linear& p, const Tensor& x, LinearCache* cache);
Tensor linear_backward(Linear& p, const LinearCache& cache, const Tensor& dy);

// ---- relu ------------------------------------------------------------------

struct ReluCache {
  Tensor x;
};

Tensor relu_forward(const Tensor& x, ReluCache* cache);
Tensor relu_backward(const ReluCache& cache, const Tensor& dy);

// ---- two-layer MLP -----------------------------------------------------

struct Mlp2 {
  Linear l1, l2;

  Mlp2() = default;
  Mlp2(int in, int hidden, int out, Rng& rng) : l1(in, hidden, rng), l2(hidden, out, rng) {}
  void visit(const std::string& prefix, const ParamVisitor& fn) {
    l1.visit(prefix + ".l1", fn);
    l2.visit(prefix + ".l2", fn);
  }
};

struct Mlp2Cache {
  LinearCache c1;
  ReluCache cr;
  LinearCache c2;
};

Tensor mlp2_forward(const Mlp2& p, const Tensor& x, Mlp2Cache* cache);
Tensor mlp2_backward(Mlp2& p, const Mlp2Cache& cache, const Tensor& dy);

// ---- conv ------------------------------------------------------------------

struct Conv2d {
  Tensor W;  // [out_ch, in_ch, k, k]
  Tensor b;  // [out_ch]
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int k, int stride, int pad, Rng& rng);

  void visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".W", W);
    fn(prefix + ".b", b);
  }
};

struct Conv2dCache {
  Tensor x;
};

/// x: [C, H, W] -> [out_ch, H', W'] with H' = (H + 2p - k)/s + 1.
Tensor conv2d_forward(const Conv2d& p, const Tensor& x, Conv2dCache* cache);
Tensor conv2d_backward(Conv2d& p, const Conv2dCache& cache, const Tensor& dy);

// ---- resampling --------------------------------------------------------

/// Bilinear resize of a [H, W] map; linear, so the backward pass is its
/// transpose scatter.
Tensor bilinear_resize(const Tensor& src, int out_h, int out_w);
Tensor bilinear_resize_backward(const Tensor& d_out, int src_h, int src_w);

// ---- pieces ----------------------------------------------------------------

double sigmoid(double z);

/// Numerically stable binary cross-entropy on a logit.
double bce_with_logit(double logit, bool label);
double bce_with_logit_backward(double logit, bool label);  // d/d logit

}  // namespace mvgaze::nn
