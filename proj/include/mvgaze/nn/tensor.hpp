#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mvgaze/error.hpp"
#include "mvgaze/rng.hpp"

namespace mvgaze::nn {

/// Dense row-major value array with an optional gradient buffer of the same
/// shape. All neural blocks run in double precision.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  int64_t numel() const { return int64_t(v.size()); }
  int dim(int i) const { return shape[size_t(i)]; }
  int rank() const { return int(shape.size()); }

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), 0.0);
  }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

int64_t numel_of(const std::vector<int>& shape);

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

/// 2D views: a rank-1 tensor reads as a single row.
MatMap mat(Tensor& t);
ConstMatMap mat(const Tensor& t);
MatMap grad_mat(Tensor& t);

/// Views with an explicit row count (numel must divide evenly).
MatMap mat_as(Tensor& t, int rows);
ConstMatMap mat_as(const Tensor& t, int rows);

void init_normal(Tensor& t, Rng& rng, double stddev);

/// Adds src into dst->g (allocating it if absent).
void accumulate_grad(Tensor& dst, const Tensor& src_values);

}  // namespace mvgaze::nn
