#include "mvgaze/nn/attention.hpp"

#include <cmath>

namespace mvgaze::nn {

AttentionParams::AttentionParams(int d_q_in, int d_kv_in, int d_k, int heads, Rng& rng)
    : wq(d_q_in, d_k, rng), wk(d_kv_in, d_k, rng), wv(d_kv_in, d_k, rng),
      wo(d_k, d_q_in, rng), head_count(heads) {
  if (d_k % heads != 0)
    throw Error(ErrorKind::ShapeMismatch, "d_k must be divisible by head_count");
}

void softmax_rows(MatMap m) {
  for (int r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

void softmax_backward_rows(ConstMatMap a, MatMap d_a) {
  for (int r = 0; r < a.rows(); ++r) {
    const double dot = d_a.row(r).dot(a.row(r));
    d_a.row(r) = (a.row(r).array() * (d_a.row(r).array() - dot)).matrix();
  }
}

Tensor cross_attention_forward(const AttentionParams& p, const Tensor& query_tokens,
                               const Tensor& kv_tokens, AttentionCache* cache) {
  AttentionCache local;
  AttentionCache* c = cache ? cache : &local;
  const int nq = int(query_tokens.numel() / p.wq.in());
  const int nk = int(kv_tokens.numel() / p.wk.in());
  const int dk = p.d_k();
  const int heads = p.head_count;
  const int dh = dk / heads;

  c->q = linear_forward(p.wq, query_tokens, &c->cq);
  c->k = linear_forward(p.wk, kv_tokens, &c->ck);
  c->v = linear_forward(p.wv, kv_tokens, &c->cv);
  auto q_m = mat_as(c->q, nq);
  auto k_m = mat_as(c->k, nk);
  auto v_m = mat_as(c->v, nk);

  c->attn = Tensor({heads, nq, nk});
  c->context = Tensor({nq, dk});
  const double scale = 1.0 / std::sqrt(double(dh));
  for (int h = 0; h < heads; ++h) {
    MatMap a(c->attn.v.data() + size_t(h) * nq * nk, nq, nk);
    a.noalias() = q_m.middleCols(h * dh, dh) * k_m.middleCols(h * dh, dh).transpose() * scale;
    softmax_rows(a);
    mat(c->context).middleCols(h * dh, dh).noalias() = a * v_m.middleCols(h * dh, dh);
  }

  Tensor out_delta = linear_forward(p.wo, c->context, &c->co);
  Tensor out(query_tokens.shape);
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = query_tokens.v[i] + out_delta.v[i];
  return out;
}

std::pair<Tensor, Tensor> cross_attention_backward(AttentionParams& p, const AttentionCache& cache,
                                                   const Tensor& d_out) {
  const int nq = int(cache.q.numel() / p.d_k());
  const int nk = int(cache.k.numel() / p.d_k());
  const int dk = p.d_k();
  const int heads = p.head_count;
  const int dh = dk / heads;
  const double scale = 1.0 / std::sqrt(double(dh));

  const Tensor d_context = linear_backward(p.wo, cache.co, d_out);
  auto dctx_m = mat_as(d_context, nq);
  auto q_m = mat_as(cache.q, nq);
  auto k_m = mat_as(cache.k, nk);
  auto v_m = mat_as(cache.v, nk);

  Tensor d_q({nq, dk}), d_k({nk, dk}), d_v({nk, dk});
  for (int h = 0; h < heads; ++h) {
    ConstMatMap a(cache.attn.v.data() + size_t(h) * nq * nk, nq, nk);
    Mat d_a = dctx_m.middleCols(h * dh, dh) * v_m.middleCols(h * dh, dh).transpose();
    mat(d_v).middleCols(h * dh, dh).noalias() +=
        a.transpose() * dctx_m.middleCols(h * dh, dh);
    softmax_backward_rows(a, MatMap(d_a.data(), nq, nk));
    mat(d_q).middleCols(h * dh, dh).noalias() += d_a * k_m.middleCols(h * dh, dh) * scale;
    mat(d_k).middleCols(h * dh, dh).noalias() +=
        d_a.transpose() * q_m.middleCols(h * dh, dh) * scale;
  }

  Tensor d_query = linear_backward(p.wq, cache.cq, d_q);
  for (size_t i = 0; i < d_query.v.size(); ++i) d_query.v[i] += d_out.v[i];  // residual path
  Tensor d_kv = linear_backward(p.wk, cache.ck, d_k);
  const Tensor d_kv_v = linear_backward(p.wv, cache.cv, d_v);
  for (size_t i = 0; i < d_kv.v.size(); ++i) d_kv.v[i] += d_kv_v.v[i];
  return {std::move(d_query), std::move(d_kv)};
}

// ---- ESA -----------------------------------------------------------------

Tensor esa_forward(const EsaBlock& p, const Tensor& query_tokens, const Tensor& kv_tokens,
                   const EsaGeometry& geometry, EsaCache* cache) {
  EsaCache local;
  EsaCache* c = cache ? cache : &local;
  const int d = p.att.wq.in();
  const int dk = p.att.d_k();
  const int heads = p.att.head_count;
  const int dh = dk / heads;
  const int n = int(query_tokens.numel() / d);
  if (int(geometry.size()) != n)
    throw Error(ErrorKind::ShapeMismatch, "esa geometry does not match token count");

  c->geometry = &geometry;
  c->q = linear_forward(p.att.wq, query_tokens, &c->cq);
  c->k_grid = linear_forward(p.att.wk, kv_tokens, &c->ck);
  c->v_grid = linear_forward(p.att.wv, kv_tokens, &c->cv);

  c->hit.clear();
  for (int i = 0; i < n; ++i)
    if (!geometry[size_t(i)].empty()) c->hit.push_back(i);
  const int n_hit = int(c->hit.size());

  Tensor out = query_tokens;
  out.shape = {n, d};
  if (n_hit == 0) {
    out.shape = query_tokens.shape;
    return out;
  }
  const int s_count = int(geometry[size_t(c->hit[0])].size());

  c->k_samp = Tensor({n_hit, s_count, dk});
  c->v_samp = Tensor({n_hit, s_count, dk});
  auto kg = mat_as(c->k_grid, int(kv_tokens.numel() / d));
  auto vg = mat_as(c->v_grid, int(kv_tokens.numel() / d));
  for (int hi = 0; hi < n_hit; ++hi) {
    const auto& samples = geometry[size_t(c->hit[size_t(hi)])];
    for (int s = 0; s < s_count; ++s) {
      const EsaSample& sm = samples[size_t(s)];
      double* krow = c->k_samp.v.data() + (size_t(hi) * s_count + s) * dk;
      double* vrow = c->v_samp.v.data() + (size_t(hi) * s_count + s) * dk;
      for (int t = 0; t < 4; ++t) {
        if (sm.w[t] == 0.0) continue;
        for (int col = 0; col < dk; ++col) {
          krow[col] += sm.w[t] * kg(sm.idx[t], col);
          vrow[col] += sm.w[t] * vg(sm.idx[t], col);
        }
      }
    }
  }

  c->attn = Tensor({n_hit, heads, s_count});
  c->context = Tensor({n_hit, dk});
  const double scale = 1.0 / std::sqrt(double(dh));
  auto q_m = mat_as(c->q, n);
  for (int hi = 0; hi < n_hit; ++hi) {
    ConstMatMap ks(c->k_samp.v.data() + size_t(hi) * s_count * dk, s_count, dk);
    ConstMatMap vs(c->v_samp.v.data() + size_t(hi) * s_count * dk, s_count, dk);
    for (int h = 0; h < heads; ++h) {
      MatMap a(c->attn.v.data() + (size_t(hi) * heads + h) * s_count, 1, s_count);
      a.noalias() =
          q_m.row(c->hit[size_t(hi)]).segment(h * dh, dh) * ks.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows(a);
      mat(c->context).row(hi).segment(h * dh, dh).noalias() = a * vs.middleCols(h * dh, dh);
    }
  }

  const Tensor delta = linear_forward(p.att.wo, c->context, &c->co);
  for (int hi = 0; hi < n_hit; ++hi) {
    const int i = c->hit[size_t(hi)];
    for (int col = 0; col < d; ++col)
      out.v[size_t(i) * d + col] += delta.v[size_t(hi) * d + col];
  }
  out.shape = query_tokens.shape;
  return out;
}

std::pair<Tensor, Tensor> esa_backward(EsaBlock& p, const EsaCache& cache, const Tensor& d_out) {
  const int d = p.att.wq.in();
  const int dk = p.att.d_k();
  const int heads = p.att.head_count;
  const int dh = dk / heads;
  const int n = int(cache.cq.x.numel() / d);
  const int n2 = int(cache.ck.x.numel() / d);
  const int n_hit = int(cache.hit.size());

  Tensor d_query = d_out;  // residual path covers every token
  d_query.shape = cache.cq.x.shape;
  Tensor d_kv(cache.ck.x.shape);
  if (n_hit == 0) return {std::move(d_query), std::move(d_kv)};
  const int s_count = cache.attn.dim(2);

  Tensor d_delta({n_hit, d});
  for (int hi = 0; hi < n_hit; ++hi) {
    const int i = cache.hit[size_t(hi)];
    for (int col = 0; col < d; ++col)
      d_delta.v[size_t(hi) * d + col] = d_out.v[size_t(i) * d + col];
  }
  const Tensor d_context = linear_backward(p.att.wo, cache.co, d_delta);

  Tensor d_q_proj({n, dk});
  Tensor d_k_grid({n2, dk}), d_v_grid({n2, dk});
  auto q_m = mat_as(cache.q, n);
  const double scale = 1.0 / std::sqrt(double(dh));
  for (int hi = 0; hi < n_hit; ++hi) {
    const int i = cache.hit[size_t(hi)];
    ConstMatMap ks(cache.k_samp.v.data() + size_t(hi) * s_count * dk, s_count, dk);
    ConstMatMap vs(cache.v_samp.v.data() + size_t(hi) * s_count * dk, s_count, dk);
    Tensor d_ks({s_count, dk}), d_vs({s_count, dk});
    for (int h = 0; h < heads; ++h) {
      ConstMatMap a(cache.attn.v.data() + (size_t(hi) * heads + h) * s_count, 1, s_count);
      ConstMatMap dctx(d_context.v.data() + size_t(hi) * dk + h * dh, 1, dh);
      Mat d_a = dctx * vs.middleCols(h * dh, dh).transpose();
      mat(d_vs).middleCols(h * dh, dh).noalias() += a.transpose() * dctx;
      softmax_backward_rows(a, MatMap(d_a.data(), 1, s_count));
      mat(d_q_proj).row(i).segment(h * dh, dh).noalias() +=
          (d_a * ks.middleCols(h * dh, dh) * scale).row(0);
      mat(d_ks).middleCols(h * dh, dh).noalias() +=
          d_a.transpose() * q_m.row(i).segment(h * dh, dh) * scale;
    }
    // Scatter sample grads back through the bilinear taps.
    const auto& samples = (*cache.geometry)[size_t(i)];
    for (int s = 0; s < s_count; ++s) {
      const EsaSample& sm = samples[size_t(s)];
      for (int t = 0; t < 4; ++t) {
        if (sm.w[t] == 0.0) continue;
        for (int col = 0; col < dk; ++col) {
          d_k_grid.v[size_t(sm.idx[t]) * dk + col] += sm.w[t] * d_ks.v[size_t(s) * dk + col];
          d_v_grid.v[size_t(sm.idx[t]) * dk + col] += sm.w[t] * d_vs.v[size_t(s) * dk + col];
        }
      }
    }
  }

  const Tensor d_query_proj = linear_backward(p.att.wq, cache.cq, d_q_proj);
  for (size_t i = 0; i < d_query.v.size(); ++i) d_query.v[i] += d_query_proj.v[i];
  d_kv = linear_backward(p.att.wk, cache.ck, d_k_grid);
  const Tensor d_kv_v = linear_backward(p.att.wv, cache.cv, d_v_grid);
  for (size_t i = 0; i < d_kv.v.size(); ++i) d_kv.v[i] += d_kv_v.v[i];
  return {std::move(d_query), std::move(d_kv)};
}

EsaGeometry esa_geometry(const Camera& cam_from, const Camera& cam_to, int grid_w, int grid_h,
                         int n_samples) {
  Camera from = cam_from;
  from.intrinsics = cam_from.intrinsics.scaled(grid_w, grid_h);
  Camera to = cam_to;
  to.intrinsics = cam_to.intrinsics.scaled(grid_w, grid_h);

  EsaGeometry geom(size_t(grid_w) * size_t(grid_h));
  Mat3 f;
  try {
    f = fundamental_matrix(from, to);
  } catch (const Error&) {
    return geom;  // no epipolar geometry: every token passes through
  }

  for (int ty = 0; ty < grid_h; ++ty) {
    for (int tx = 0; tx < grid_w; ++tx) {
      const auto seg = epipolar_segment(f, Pixel{double(tx), double(ty)}, to.intrinsics);
      if (!seg) continue;
      auto& out = geom[size_t(ty) * grid_w + tx];
      const auto pixels = sample_epipolar(*seg, n_samples);
      out.reserve(pixels.size());
      for (const Pixel& px : pixels) {
        const double xc = std::clamp(px.u, 0.0, double(grid_w - 1));
        const double yc = std::clamp(px.v, 0.0, double(grid_h - 1));
        const int x0 = int(std::floor(xc));
        const int y0 = int(std::floor(yc));
        const int x1 = std::min(x0 + 1, grid_w - 1);
        const int y1 = std::min(y0 + 1, grid_h - 1);
        const double wx = xc - x0;
        const double wy = yc - y0;
        EsaSample sm;
        sm.idx[0] = y0 * grid_w + x0;
        sm.w[0] = (1.0 - wy) * (1.0 - wx);
        sm.idx[1] = y0 * grid_w + x1;
        sm.w[1] = (1.0 - wy) * wx;
        sm.idx[2] = y1 * grid_w + x0;
        sm.w[2] = wy * (1.0 - wx);
        sm.idx[3] = y1 * grid_w + x1;
        sm.w[3] = wy * wx;
        out.push_back(sm);
      }
    }
  }
  return geom;
}

}  // namespace mvgaze::nn
