#include <doctest.h>

#include "mvgaze/gaze_field.hpp"
#include "mvgaze/rng.hpp"
#include "support/test_helpers.hpp"

using namespace mvgaze;
using namespace mvgaze::test;

namespace {

PointGrid random_cloud(const Camera& cam, Rng& rng, DepthMap* depth_out = nullptr) {
  DepthMap d(cam.intrinsics.width, cam.intrinsics.height);
  for (double& v : d.values) v = rng.uniform(0.5, 6.0);
  if (depth_out) *depth_out = d;
  return pseudo_pointcloud(cam, d);
}

}  // namespace

TEST_CASE("pixel_to_eye_vector basics") {
  const Camera cam = simple_camera("c", 100, 100, 32, 24, 64, 48);
  DepthMap d(64, 48, 1.0);
  d.at(32, 24) = 1.0;
  d.at(40, 24) = 2.0;
  const PointGrid cloud = pseudo_pointcloud(cam, d);
  const EyeLocation eye{Pixel{32, 24}, cloud.at(32, 24)};

  SUBCASE("eye on axis, target deeper on axis gives (0,0,dz)") {
    DepthMap d2(64, 48, 1.0);
    d2.at(32, 24) = 2.0;
    const PointGrid cloud2 = pseudo_pointcloud(cam, d2);
    const EyeLocation eye1{Pixel{32, 24}, Vec3(0, 0, 1)};
    const GazeVector v = cloud2.at(32, 24) - eye1.p3;  // direct difference
    CHECK(v.isApprox(Vec3(0, 0, 1), 1e-12));
  }
  SUBCASE("vector equals point difference") {
    const GazeVector v = pixel_to_eye_vector(cloud, eye, Pixel{40, 24});
    CHECK(v.isApprox(cloud.at(40, 24) - cloud.at(32, 24), 1e-12));
  }
  SUBCASE("eye pixel is degenerate") {
    CHECK_THROWS_AS(pixel_to_eye_vector(cloud, eye, Pixel{32, 24}), Error);
  }
  SUBCASE("depth scaling scales the vector, direction unchanged") {
    Rng rng(2);
    DepthMap base(64, 48);
    for (double& v : base.values) v = rng.uniform(0.5, 4.0);
    DepthMap scaled = base;
    for (double& v : scaled.values) v *= 3.7;
    const PointGrid g1 = pseudo_pointcloud(cam, base);
    const PointGrid g2 = pseudo_pointcloud(cam, scaled);
    const EyeLocation e1{Pixel{10, 10}, g1.at(10, 10)};
    const EyeLocation e2{Pixel{10, 10}, g2.at(10, 10)};
    const GazeVector v1 = pixel_to_eye_vector(g1, e1, Pixel{50, 30});
    const GazeVector v2 = pixel_to_eye_vector(g2, e2, Pixel{50, 30});
    CHECK((v2 - 3.7 * v1).norm() <= 1e-12 * v2.norm());
    CHECK(v1.normalized().dot(v2.normalized()) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("decayed cosine: frozen value and monotonicity") {
  const DecayConfig cfg{};
  CHECK(decayed_cosine(0.8, cfg) == doctest::Approx(0.8 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(decayed_cosine(0.8, cfg) == doctest::Approx(0.29430355293715387).epsilon(1e-12));
  CHECK(decayed_cosine(-0.5, cfg) == 0.0);
  CHECK(decayed_cosine(0.95, cfg) == 0.95);
  CHECK(decayed_cosine(0.9, cfg) == 0.9);
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double raw = -0.2 + 1.2 * i / 1000.0;
    const double out = decayed_cosine(raw, cfg);
    CHECK(out >= prev);  // nondecreasing
    CHECK(out >= 0.0);
    CHECK(out <= 1.0);
    prev = out;
  }
}

TEST_CASE("fov_heatmap: value 1 at the target pixel for the pseudo GT gaze") {
  const Camera cam = simple_camera("c", 150, 150, 32, 24, 64, 48);
  Rng rng(5);
  DepthMap d;
  const PointGrid cloud = random_cloud(cam, rng, &d);
  const EyeLocation eye{Pixel{8, 40}, cloud.at(8, 40)};
  const Pixel target{51, 11};
  const GazeVector g = cloud.at(51, 11) - eye.p3;
  const FovHeatmap hm = fov_heatmap(cloud, eye, g);
  CHECK(hm.at(51, 11) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hm.at(8, 40) == 0.0);  // eye pixel zeroed
  for (double v : hm.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("fov_heatmap: antiparallel pixels clamp to zero") {
  const Camera cam = simple_camera("c", 150, 150, 32, 24, 64, 48);
  const PointGrid cloud = pseudo_pointcloud(cam, DepthMap(64, 48, 2.0));
  const EyeLocation eye{Pixel{32, 24}, Vec3(0, 0, 2.0)};
  // Gaze pointing back toward the camera: every scene vector points away.
  const FovHeatmap hm = fov_heatmap(cloud, eye, GazeVector(0, 0, -1));
  for (double v : hm.values) CHECK(v == 0.0);
}

TEST_CASE("fov_heatmap: power-of-two depth scaling is bitwise invariant") {
  const Camera cam = simple_camera("c", 120, 130, 30, 22, 64, 48);
  Rng rng(9);
  DepthMap d(64, 48);
  for (double& v : d.values) v = rng.uniform(0.5, 5.0);
  DepthMap scaled = d;
  for (double& v : scaled.values) v *= 128.0;

  const PointGrid c1 = pseudo_pointcloud(cam, d);
  const PointGrid c2 = pseudo_pointcloud(cam, scaled);
  const EyeLocation e1{Pixel{12, 20}, c1.at(12, 20)};
  const EyeLocation e2{Pixel{12, 20}, c2.at(12, 20)};
  const GazeVector g(0.2, -0.1, 1.0);
  const FovHeatmap h1 = fov_heatmap(c1, e1, g);
  const FovHeatmap h2 = fov_heatmap(c2, e2, g);
  for (size_t i = 0; i < h1.values.size(); ++i) CHECK(h1.values[i] == h2.values[i]);
}

TEST_CASE("fov_heatmap: rotation equivariance") {
  const Camera cam = simple_camera("c", 120, 130, 30, 22, 64, 48);
  Rng rng(11);
  DepthMap d(64, 48);
  for (double& v : d.values) v = rng.uniform(0.5, 5.0);
  const PointGrid cloud = pseudo_pointcloud(cam, d);
  const EyeLocation eye{Pixel{12, 20}, cloud.at(12, 20)};
  const GazeVector g(0.3, 0.2, 0.9);
  const FovHeatmap base = fov_heatmap(cloud, eye, g);

  const Mat3 r = random_rotation(rng);
  PointGrid rotated = cloud;
  for (Vec3& p : rotated.points) p = r * p;
  const EyeLocation eye_r{eye.px, r * eye.p3};
  const FovHeatmap turned = fov_heatmap(rotated, eye_r, r * g);
  for (size_t i = 0; i < base.values.size(); ++i)
    CHECK(std::abs(base.values[i] - turned.values[i]) <= 1e-12);
}

TEST_CASE("fov_heatmap_cross_view: same-camera case reduces to fov_heatmap") {
  const Camera cam = simple_camera("c", 150, 150, 32, 24, 64, 48);
  Rng rng(13);
  DepthMap d;
  const PointGrid cloud = random_cloud(cam, rng, &d);
  const EyeLocation eye{Pixel{20, 30}, cloud.at(20, 30)};
  const GazeVector g(0.1, -0.3, 1.0);
  const FovHeatmap own = fov_heatmap(cloud, eye, g);
  const FovHeatmap cross = fov_heatmap_cross_view(cam, cloud, eye.p3, g);
  for (size_t i = 0; i < own.values.size(); ++i) CHECK(own.values[i] == cross.values[i]);
}

TEST_CASE("fov_heatmap_cross_view: eye behind the camera still yields valid values") {
  const Camera cam = simple_camera("c", 150, 150, 32, 24, 64, 48);
  const PointGrid cloud = pseudo_pointcloud(cam, DepthMap(64, 48, 3.0));
  const Vec3 eye_behind(0.2, 0.1, -1.5);
  const FovHeatmap hm = fov_heatmap_cross_view(cam, cloud, eye_behind, GazeVector(0, 0, 1));
  for (double v : hm.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(*std::max_element(hm.values.begin(), hm.values.end()) > 0.0);
}

TEST_CASE("downsample_area averages blocks") {
  FovHeatmap hm(4, 2);
  for (int i = 0; i < 8; ++i) hm.values[size_t(i)] = double(i);
  const FovHeatmap small = downsample_area(hm, 2, 1);
  // Blocks: {0,1,4,5} and {2,3,6,7}.
  CHECK(small.at(0, 0) == doctest::Approx(2.5));
  CHECK(small.at(1, 0) == doctest::Approx(4.5));
  CHECK_THROWS_AS(downsample_area(hm, 3, 1), Error);
}
