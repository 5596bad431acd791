#include "mvgaze/nn/tensor.hpp"

namespace mvgaze::nn {

int64_t numel_of(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw Error(ErrorKind::ShapeMismatch, "tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), v(size_t(numel_of(shape)), 0.0) {}

namespace {

std::pair<int, int> as_2d(const Tensor& t) {
  if (t.rank() == 1) return {1, t.dim(0)};
  if (t.rank() == 2) return {t.dim(0), t.dim(1)};
  // Collapse leading dims; used for conv tensors viewed as matrices.
  int rows = 1;
  for (int i = 0; i + 1 < t.rank(); ++i) rows *= t.dim(i);
  return {rows, t.dim(t.rank() - 1)};
}

}  // namespace

MatMap mat(Tensor& t) {
  auto [r, c] = as_2d(t);
  return MatMap(t.v.data(), r, c);
}

ConstMatMap mat(const Tensor& t) {
  auto [r, c] = as_2d(t);
  return ConstMatMap(t.v.data(), r, c);
}

MatMap grad_mat(Tensor& t) {
  t.ensure_grad();
  auto [r, c] = as_2d(t);
  return MatMap(t.g.data(), r, c);
}

MatMap mat_as(Tensor& t, int rows) {
  if (rows <= 0 || t.numel() % rows != 0)
    throw Error(ErrorKind::ShapeMismatch, "tensor does not reshape to requested rows");
  return MatMap(t.v.data(), rows, int(t.numel() / rows));
}

ConstMatMap mat_as(const Tensor& t, int rows) {
  if (rows <= 0 || t.numel() % rows != 0)
    throw Error(ErrorKind::ShapeMismatch, "tensor does not reshape to requested rows");
  return ConstMatMap(t.v.data(), rows, int(t.numel() / rows));
}

void init_normal(Tensor& t, Rng& rng, double stddev) {
  for (double& x : t.v) x = rng.normal(0.0, stddev);
}

void accumulate_grad(Tensor& dst, const Tensor& src_values) {
  if (!dst.same_shape(src_values))
    throw Error(ErrorKind::ShapeMismatch, "gradient shape mismatch");
  dst.ensure_grad();
  for (size_t i = 0; i < dst.g.size(); ++i) dst.g[i] += src_values.v[i];
}

}  // namespace mvgaze::nn
