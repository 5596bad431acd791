#include "mvgaze/nn/layers.hpp"

#include <cmath>

namespace mvgaze::nn {

Linear::Linear(int in, int out, Rng& rng) : W({out, in}), b({out}) {
  init_normal(W, rng, 1.0 / std::sqrt(double(in)));
}

Tensor linear_forward(const Linear& p, const Tensor& x, LinearCache* cache) {
  if (x.numel() % p.in() != 0)
    throw Error(ErrorKind::ShapeMismatch, "linear input width mismatch");
  const int n = int(x.numel() / p.in());
  Tensor y({n, p.out()});
  mat(y) = mat_as(x, n) * mat(p.W).transpose();
  mat(y).rowwise() += ConstVecMap(p.b.v.data(), p.out()).transpose();
  if (cache) cache->x = x;
  if (x.rank() == 1) y.shape = {p.out()};
  return y;
}

Tensor linear_backward(Linear& p, const LinearCache& cache, const Tensor& dy) {
  const int n = int(cache.x.numel() / p.in());
  if (dy.numel() != int64_t(n) * p.out())
    throw Error(ErrorKind::ShapeMismatch, "linear grad shape mismatch");
  auto dy_m = mat_as(dy, n);
  auto x_m = mat_as(cache.x, n);

  p.W.ensure_grad();
  p.b.ensure_grad();
  MatMap(p.W.g.data(), p.out(), p.in()).noalias() += dy_m.transpose() * x_m;
  VecMap(p.b.g.data(), p.out()).noalias() += dy_m.colwise().sum().transpose();

  Tensor dx(cache.x.shape);
  mat_as(dx, n).noalias() = dy_m * mat(p.W);
  return dx;
}

Tensor relu_forward(const Tensor& x, ReluCache* cache) {
  Tensor y(x.shape);
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
  if (cache) cache->x = x;
  return y;
}

Tensor relu_backward(const ReluCache& cache, const Tensor& dy) {
  Tensor dx(cache.x.shape);
  for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = cache.x.v[i] > 0.0 ? dy.v[i] : 0.0;
  return dx;
}

Tensor mlp2_forward(const Mlp2& p, const Tensor& x, Mlp2Cache* cache) {
  Mlp2Cache local;
  Mlp2Cache* c = cache ? cache : &local;
  const Tensor h1 = linear_forward(p.l1, x, &c->c1);
  const Tensor h2 = relu_forward(h1, &c->cr);
  return linear_forward(p.l2, h2, &c->c2);
}

Tensor mlp2_backward(Mlp2& p, const Mlp2Cache& cache, const Tensor& dy) {
  const Tensor dh2 = linear_backward(p.l2, cache.c2, dy);
  const Tensor dh1 = relu_backward(cache.cr, dh2);
  return linear_backward(p.l1, cache.c1, dh1);
}

Conv2d::Conv2d(int in_ch, int out_ch, int k, int stride_, int pad_, Rng& rng)
    : W({out_ch, in_ch, k, k}), b({out_ch}), stride(stride_), pad(pad_) {
  init_normal(W, rng, 1.0 / std::sqrt(double(in_ch * k * k)));
}

Tensor conv2d_forward(const Conv2d& p, const Tensor& x, Conv2dCache* cache) {
  if (x.rank() != 3 || x.dim(0) != p.W.dim(1))
    throw Error(ErrorKind::ShapeMismatch, "conv input must be [C,H,W] with matching channels");
  const int in_ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int out_ch = p.W.dim(0), k = p.W.dim(2);
  const int oh = (h + 2 * p.pad - k) / p.stride + 1;
  const int ow = (w + 2 * p.pad - k) / p.stride + 1;
  Tensor y({out_ch, oh, ow});
  for (int oc = 0; oc < out_ch; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = p.b.v[size_t(oc)];
        for (int ic = 0; ic < in_ch; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * p.stride + ky - p.pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * p.stride + kx - p.pad;
              if (ix < 0 || ix >= w) continue;
              acc += p.W.v[size_t(((oc * in_ch + ic) * k + ky) * k + kx)] *
                     x.v[size_t((ic * h + iy) * w + ix)];
            }
          }
        }
        y.v[size_t((oc * oh + oy) * ow + ox)] = acc;
      }
    }
  }
  if (cache) cache->x = x;
  return y;
}

Tensor conv2d_backward(Conv2d& p, const Conv2dCache& cache, const Tensor& dy) {
  const Tensor& x = cache.x;
  const int in_ch = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int out_ch = p.W.dim(0), k = p.W.dim(2);
  const int oh = dy.dim(1), ow = dy.dim(2);
  p.W.ensure_grad();
  p.b.ensure_grad();
  Tensor dx(x.shape);
  for (int oc = 0; oc < out_ch; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double go = dy.v[size_t((oc * oh + oy) * ow + ox)];
        if (go == 0.0) continue;
        p.b.g[size_t(oc)] += go;
        for (int ic = 0; ic < in_ch; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * p.stride + ky - p.pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * p.stride + kx - p.pad;
              if (ix < 0 || ix >= w) continue;
              const size_t wi = size_t(((oc * in_ch + ic) * k + ky) * k + kx);
              const size_t xi = size_t((ic * h + iy) * w + ix);
              p.W.g[wi] += go * x.v[xi];
              dx.v[xi] += go * p.W.v[wi];
            }
          }
        }
      }
    }
  }
  return dx;
}

namespace {

struct ResizeTap {
  int i0, i1;
  double w0, w1;
};

ResizeTap tap(int out_size, int src_size, int o) {
  // Pixel-center alignment between the two grids.
  const double src = (o + 0.5) * double(src_size) / double(out_size) - 0.5;
  const double clamped = std::min(std::max(src, 0.0), double(src_size - 1));
  ResizeTap t;
  t.i0 = int(std::floor(clamped));
  t.i1 = std::min(t.i0 + 1, src_size - 1);
  t.w1 = clamped - t.i0;
  t.w0 = 1.0 - t.w1;
  return t;
}

}  // namespace

Tensor bilinear_resize(const Tensor& src, int out_h, int out_w) {
  if (src.rank() != 2) throw Error(ErrorKind::ShapeMismatch, "bilinear_resize wants [H,W]");
  const int sh = src.dim(0), sw = src.dim(1);
  Tensor out({out_h, out_w});
  for (int y = 0; y < out_h; ++y) {
    const ResizeTap ty = tap(out_h, sh, y);
    for (int x = 0; x < out_w; ++x) {
      const ResizeTap tx = tap(out_w, sw, x);
      out.v[size_t(y * out_w + x)] =
          ty.w0 * (tx.w0 * src.v[size_t(ty.i0 * sw + tx.i0)] +
                   tx.w1 * src.v[size_t(ty.i0 * sw + tx.i1)]) +
          ty.w1 * (tx.w0 * src.v[size_t(ty.i1 * sw + tx.i0)] +
                   tx.w1 * src.v[size_t(ty.i1 * sw + tx.i1)]);
    }
  }
  return out;
}

Tensor bilinear_resize_backward(const Tensor& d_out, int src_h, int src_w) {
  const int oh = d_out.dim(0), ow = d_out.dim(1);
  Tensor d_src({src_h, src_w});
  for (int y = 0; y < oh; ++y) {
    const ResizeTap ty = tap(oh, src_h, y);
    for (int x = 0; x < ow; ++x) {
      const ResizeTap tx = tap(ow, src_w, x);
      const double g = d_out.v[size_t(y * ow + x)];
      d_src.v[size_t(ty.i0 * src_w + tx.i0)] += g * ty.w0 * tx.w0;
      d_src.v[size_t(ty.i0 * src_w + tx.i1)] += g * ty.w0 * tx.w1;
      d_src.v[size_t(ty.i1 * src_w + tx.i0)] += g * ty.w1 * tx.w0;
      d_src.v[size_t(ty.i1 * src_w + tx.i1)] += g * ty.w1 * tx.w1;
    }
  }
  return d_src;
}

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double bce_with_logit(double logit, bool label) {
  // max(z,0) - z*y + log(1 + exp(-|z|))
  return std::max(logit, 0.0) - logit * (label ? 1.0 : 0.0) +
         std::log1p(std::exp(-std::abs(logit)));
}

double bce_with_logit_backward(double logit, bool label) {
  return sigmoid(logit) - (label ? 1.0 : 0.0);
}

}  // namespace mvgaze::nn
