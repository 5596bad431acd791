#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "mvgaze/depth.hpp"
#include "mvgaze/io/dpth.hpp"
#include "mvgaze/rng.hpp"
#include "support/test_helpers.hpp"

using namespace mvgaze;
using namespace mvgaze::test;

namespace {

DepthMap constant_depth(int w, int h, double value) { return DepthMap(w, h, value); }

}  // namespace

TEST_CASE("pseudo point cloud: constant plane puts the principal point on the axis") {
  const Camera cam = simple_camera("c", 100, 100, 32, 24, 64, 48);
  const PointGrid grid = pseudo_pointcloud(cam, constant_depth(64, 48, 2.5));
  CHECK(grid.at(32, 24).isApprox(Vec3(0, 0, 2.5), 1e-12));
}

TEST_CASE("pseudo point cloud scales linearly with depth") {
  const Camera cam = simple_camera("c", 80, 90, 30, 20, 64, 48);
  Rng rng(3);
  DepthMap d(64, 48);
  for (double& v : d.values) v = rng.uniform(0.5, 5.0);
  DepthMap d2 = d;
  for (double& v : d2.values) v *= 2.0;  // power-of-two scale is exact
  const PointGrid g1 = pseudo_pointcloud(cam, d);
  const PointGrid g2 = pseudo_pointcloud(cam, d2);
  for (size_t i = 0; i < g1.points.size(); ++i)
    CHECK((g2.points[i] - 2.0 * g1.points[i]).norm() == 0.0);
}

TEST_CASE("pseudo point cloud validates shape") {
  const Camera cam = simple_camera("c", 80, 90, 30, 20, 64, 48);
  CHECK_THROWS_AS(pseudo_pointcloud(cam, constant_depth(32, 24, 1.0)), Error);
}

TEST_CASE("ransac recovers the identity on clean equal maps") {
  Rng rng(17);
  DepthMap rel(40, 30);
  for (double& v : rel.values) v = rng.uniform(1.0, 6.0);
  const PixelMask mask(40, 30, true);
  RansacConfig cfg;
  cfg.seed = 1;
  const ScaleShift fit = ransac_scale_shift(rel, rel, mask, cfg);
  CHECK(fit.a == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(fit.b) <= 1e-9);
  CHECK(fit.inlier_rms <= 1e-9);
  CHECK(fit.inlier_count == 40 * 30);
}

TEST_CASE("ransac recovers a planted affine map under 30% outliers") {
  Rng rng(99);
  DepthMap rel(60, 40);
  for (double& v : rel.values) v = rng.uniform(0.8, 5.0);
  AbsoluteDepthMap abs;
  abs.width = rel.width;
  abs.height = rel.height;
  abs.values.resize(rel.size());
  for (size_t i = 0; i < rel.size(); ++i) abs.values[i] = 2.0 * rel.values[i] + 0.5;
  for (size_t i = 0; i < rel.size(); ++i)
    if (rng.uniform() < 0.3) abs.values[i] = rng.uniform(0.1, 12.0);

  RansacConfig cfg;
  cfg.seed = 4;
  const ScaleShift fit = ransac_scale_shift(rel, abs, PixelMask(60, 40, true), cfg);
  CHECK(std::abs(fit.a - 2.0) / 2.0 <= 0.01);
  CHECK(std::abs(fit.b - 0.5) / 0.5 <= 0.01);
}

TEST_CASE("ransac is bit-reproducible for a fixed seed") {
  Rng rng(5);
  DepthMap rel(50, 50);
  for (double& v : rel.values) v = rng.uniform(1.0, 4.0);
  AbsoluteDepthMap abs = rel;
  for (size_t i = 0; i < abs.values.size(); ++i) abs.values[i] = 1.7 * abs.values[i] + 0.2;
  for (size_t i = 0; i < abs.values.size(); ++i)
    if (rng.uniform() < 0.2) abs.values[i] = rng.uniform(0.5, 9.0);
  RansacConfig cfg;
  cfg.seed = 1234;
  const ScaleShift f1 = ransac_scale_shift(rel, abs, PixelMask(50, 50, true), cfg);
  const ScaleShift f2 = ransac_scale_shift(rel, abs, PixelMask(50, 50, true), cfg);
  CHECK(f1.a == f2.a);
  CHECK(f1.b == f2.b);
  CHECK(f1.inlier_count == f2.inlier_count);
  CHECK(f1.inlier_rms == f2.inlier_rms);
}

TEST_CASE("ransac error paths") {
  DepthMap rel(20, 20, 1.0);
  SUBCASE("fully masked input throws TooFewPixels") {
    try {
      ransac_scale_shift(rel, rel, PixelMask(20, 20, false), RansacConfig{});
      FAIL("expected TooFewPixels");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::TooFewPixels);
    }
  }
  SUBCASE("pure noise yields NoConsensus") {
    Rng rng(8);
    DepthMap r2(30, 30);
    AbsoluteDepthMap a2(30, 30);
    for (double& v : r2.values) v = rng.uniform(1.0, 2.0);
    for (double& v : a2.values) v = rng.uniform(0.1, 50.0);
    RansacConfig cfg;
    cfg.seed = 3;
    cfg.threshold_frac_of_median = 1e-7;
    try {
      ransac_scale_shift(r2, a2, PixelMask(30, 30, true), cfg);
      FAIL("expected NoConsensus");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoConsensus);
    }
  }
}

TEST_CASE("apply_scale_shift basics") {
  DepthMap rel(4, 4, 1.0);
  SUBCASE("identity") {
    const auto out = apply_scale_shift(rel, ScaleShift{1.0, 0.0});
    CHECK(out.values == rel.values);
  }
  SUBCASE("a=2 b=0.5 maps 1.0 to 2.5") {
    const auto out = apply_scale_shift(rel, ScaleShift{2.0, 0.5});
    CHECK(out.values[0] == doctest::Approx(2.5));
  }
  SUBCASE("non-positive results throw") {
    CHECK_THROWS_AS(apply_scale_shift(rel, ScaleShift{1.0, -2.0}), Error);
  }
  SUBCASE("round trip through a clean fit stays within the inlier RMS") {
    Rng rng(21);
    DepthMap r(30, 30);
    for (double& v : r.values) v = rng.uniform(1.0, 5.0);
    AbsoluteDepthMap a;
    a.width = a.height = 30;
    a.values.resize(r.size());
    for (size_t i = 0; i < r.size(); ++i) a.values[i] = 3.1 * r.values[i] + 0.7;
    RansacConfig cfg;
    cfg.seed = 2;
    const ScaleShift fit = ransac_scale_shift(r, a, PixelMask(30, 30, true), cfg);
    const auto mapped = apply_scale_shift(r, fit);
    for (size_t i = 0; i < mapped.values.size(); ++i)
      CHECK(std::abs(mapped.values[i] - a.values[i]) <= std::max(fit.inlier_rms, 1e-9));
  }
}

TEST_CASE("DPTH round trip preserves float32 payloads exactly") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "mvgaze_test_depth.dpth").string();
  Rng rng(31);
  DepthMap d(17, 9);
  for (double& v : d.values) v = double(float(rng.uniform(0.1, 20.0)));  // float-representable
  io::write_dpth(path, d);
  const DepthMap back = io::read_depth(path);
  CHECK(back.width == 17);
  CHECK(back.height == 9);
  for (size_t i = 0; i < d.values.size(); ++i) CHECK(back.values[i] == d.values[i]);
  std::remove(path.c_str());
}

TEST_CASE("depth loader rejects non-positive values") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "mvgaze_test_bad.dpth").string();
  DepthMap d(4, 4, 1.0);
  d.values[5] = 0.0;
  io::write_dpth(path, d);
  CHECK_THROWS_AS(io::read_depth(path), Error);
  std::remove(path.c_str());
}
