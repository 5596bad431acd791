#include <doctest.h>

#include "mvgaze/geometry.hpp"
#include "support/test_helpers.hpp"

using namespace mvgaze;
using namespace mvgaze::test;

TEST_CASE("project: principal-axis point lands on the principal point") {
  const Camera cam = simple_camera("c", 100, 100, 0, 0, 640, 480);
  const Pixel px = project(cam, Vec3(0, 0, 1));
  CHECK(px.u == doctest::Approx(0.0));
  CHECK(px.v == doctest::Approx(0.0));
}

TEST_CASE("project: direct pinhole arithmetic") {
  const Camera cam = simple_camera("c", 100, 100, 50, 50, 640, 480);
  const Pixel px = project(cam, Vec3(1, 0, 2));
  CHECK(px.u == doctest::Approx(100.0));
  CHECK(px.v == doctest::Approx(50.0));
}

TEST_CASE("project rejects points behind the camera") {
  const Camera cam = simple_camera("c", 100, 100, 50, 50, 640, 480);
  CHECK_THROWS_AS(project(cam, Vec3(0, 0, -1)), Error);
  CHECK_THROWS_AS(project(cam, Vec3(0, 0, 0)), Error);
}

TEST_CASE("backproject: principal point and direct arithmetic") {
  const Camera cam = simple_camera("c", 100, 100, 320, 240, 640, 480);
  const Vec3 p = backproject(cam, Pixel{320, 240}, 3.5);
  CHECK(p.isApprox(Vec3(0, 0, 3.5), 1e-12));

  const Camera cam2 = simple_camera("c2", 100, 100, 0, 0, 640, 480);
  const Vec3 q = backproject(cam2, Pixel{50, 0}, 2.0);
  CHECK(q.isApprox(Vec3(1, 0, 2), 1e-12));

  CHECK_THROWS_AS(backproject(cam, Pixel{0, 0}, 0.0), Error);
}

TEST_CASE("project/backproject round trip stays within 1e-9 px") {
  Rng rng(7);
  const Camera cam = simple_camera("c", 480.3, 472.8, 321.7, 243.2, 640, 480);
  for (int i = 0; i < 500; ++i) {
    const Pixel px{rng.uniform(0.0, 639.0), rng.uniform(0.0, 479.0)};
    const double depth = rng.uniform(0.2, 50.0);
    const Pixel back = project(cam, backproject(cam, px, depth));
    CHECK(std::abs(back.u - px.u) <= 1e-9);
    CHECK(std::abs(back.v - px.v) <= 1e-9);
  }
}

TEST_CASE("relative_rotation basics and inverse pairing") {
  Extrinsics a, b;
  SUBCASE("equal rotations give identity") {
    a.R = rot_z(37.0);
    b.R = rot_z(37.0);
    CHECK((relative_rotation(a, b) - Mat3::Identity()).norm() <= 1e-12);
  }
  SUBCASE("identity second view returns the first rotation") {
    a.R = rot_z(90.0);
    CHECK((relative_rotation(a, b) - rot_z(90.0)).norm() <= 1e-12);
  }
  SUBCASE("relative_rotation(a,b) * relative_rotation(b,a) = I") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
      a.R = random_rotation(rng);
      b.R = random_rotation(rng);
      const Mat3 prod = relative_rotation(a, b) * relative_rotation(b, a);
      CHECK((prod - Mat3::Identity()).norm() <= 1e-12);
      const Mat3 r = relative_rotation(a, b);
      CHECK((r.transpose() * r - Mat3::Identity()).norm() <= 1e-12);
      CHECK(std::abs(r.determinant() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("transform_point identity, translation, and round trip") {
  const Camera a = simple_camera("a", 100, 100, 0, 0, 64, 48, Mat3::Identity(), Vec3(1, 2, 3));
  const Camera b = simple_camera("b", 100, 100, 0, 0, 64, 48, Mat3::Identity(), Vec3(-2, 0, 5));
  SUBCASE("src == dst is the identity") {
    const Vec3 p(0.3, -0.7, 2.0);
    CHECK(transform_point(a, a, p).isApprox(p, 1e-12));
  }
  SUBCASE("pure translation differs by t_dst - t_src") {
    const Vec3 p(0.3, -0.7, 2.0);
    const Vec3 q = transform_point(a, b, p);
    CHECK((q - p - (b.extrinsics.t - a.extrinsics.t)).norm() <= 1e-12);
  }
  SUBCASE("round trip over random rigs") {
    Rng rng(13);
    for (int i = 0; i < 50; ++i) {
      Camera c1 = a, c2 = b;
      c1.extrinsics.R = random_rotation(rng);
      c2.extrinsics.R = random_rotation(rng);
      c1.extrinsics.t = Vec3(rng.normal(), rng.normal(), rng.normal());
      c2.extrinsics.t = Vec3(rng.normal(), rng.normal(), rng.normal());
      const Vec3 p(rng.normal(), rng.normal(), rng.normal());
      CHECK((transform_point(c2, c1, transform_point(c1, c2, p)) - p).norm() <= 1e-9);
    }
  }
}

TEST_CASE("fundamental matrix: degenerate baseline and rectified stereo") {
  const Camera c1 = simple_camera("c1", 400, 400, 320, 240, 640, 480);
  SUBCASE("identical extrinsics throw") {
    CHECK_THROWS_AS(fundamental_matrix(c1, c1), Error);
  }
  SUBCASE("pure x-translation gives horizontal epipolar lines") {
    // Center of camera 2 at (1,0,0): t = -R*C = (-1,0,0).
    const Camera c2 =
        simple_camera("c2", 400, 400, 320, 240, 640, 480, Mat3::Identity(), Vec3(-1, 0, 0));
    const Mat3 f = fundamental_matrix(c1, c2);
    const EpipolarLine l = epipolar_line(f, Pixel{100.0, 211.0});
    const double scale = std::hypot(l.a, l.b);
    CHECK(std::abs(l.a / scale) <= 1e-12);  // horizontal
    // The matching row is the same v coordinate.
    CHECK(std::abs(-l.c / l.b - 211.0) <= 1e-9);
  }
}

TEST_CASE("fundamental matrix: epipolar constraint on random rigs") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 center(0, 0, 4);
    const Vec3 pos1(rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(-1, 1));
    Vec3 pos2(rng.uniform(-3, 3), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if ((pos1 - pos2).norm() < 0.5) pos2 += Vec3(1, 0, 0);
    const Camera c1 = look_at_camera("c1", pos1, center, 500, 640, 480);
    const Camera c2 = look_at_camera("c2", pos2, center, 480, 640, 480);
    Mat3 f = fundamental_matrix(c1, c2);
    f /= f.norm();  // unit Frobenius norm
    CHECK(f.jacobiSvd().singularValues()(2) <= 1e-9);  // rank 2
    for (int i = 0; i < 50; ++i) {
      const Vec3 p = center + Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const Vec3 in1 = c1.world_to_camera(p);
      const Vec3 in2 = c2.world_to_camera(p);
      if (in1.z() <= 0.1 || in2.z() <= 0.1) continue;
      const Pixel x1 = project(c1, in1);
      const Pixel x2 = project(c2, in2);
      const double residual =
          Vec3(x2.u, x2.v, 1.0).dot(f * Vec3(x1.u, x1.v, 1.0));
      CHECK(std::abs(residual) < 1e-6);
    }
  }
}

TEST_CASE("epipolar segment clipping") {
  const Camera c1 = simple_camera("c1", 400, 400, 320, 240, 640, 480);
  const Camera c2 =
      simple_camera("c2", 400, 400, 320, 240, 640, 480, Mat3::Identity(), Vec3(-1, 0, 0));
  const Mat3 f = fundamental_matrix(c1, c2);

  SUBCASE("rectified stereo spans the full width at the matching row") {
    const auto seg = epipolar_segment(f, Pixel{320.0, 100.0}, c2.intrinsics);
    REQUIRE(seg.has_value());
    const double lo = std::min(seg->p0.u, seg->p1.u);
    const double hi = std::max(seg->p0.u, seg->p1.u);
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(hi == doctest::Approx(640.0).epsilon(1e-9));
    CHECK(seg->p0.v == doctest::Approx(100.0));
    CHECK(hi < 640.0);  // half-open rectangle
  }
  SUBCASE("line outside the image clips to nothing") {
    // Rectified rig: the epipolar line of v=10000 sits far below the image.
    const auto seg = epipolar_segment(f, Pixel{320.0, 10000.0}, c2.intrinsics);
    CHECK(!seg.has_value());
  }
  SUBCASE("endpoints satisfy the line equation") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const Pixel px{rng.uniform(0, 640), rng.uniform(0, 480)};
      const auto seg = epipolar_segment(f, px, c2.intrinsics);
      if (!seg) continue;
      const EpipolarLine l = epipolar_line(f, px);
      const double scale = std::hypot(l.a, l.b);
      CHECK(std::abs(l.residual(seg->p0)) / scale <= 1e-9);
      CHECK(std::abs(l.residual(seg->p1)) / scale <= 1e-9);
    }
  }
}

TEST_CASE("sample_epipolar spacing and bounds") {
  const Segment seg{Pixel{0, 0}, Pixel{2, 0}};
  SUBCASE("n=2 returns the endpoints") {
    const auto pts = sample_epipolar(seg, 2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].u == 0.0);
    CHECK(pts[1].u == 2.0);
  }
  SUBCASE("n=3 adds the midpoint") {
    const auto pts = sample_epipolar(seg, 3);
    REQUIRE(pts.size() == 3);
    CHECK(pts[1].u == doctest::Approx(1.0));
    CHECK(pts[1].v == doctest::Approx(0.0));
  }
  SUBCASE("default count is 48") { CHECK(kEpipolarSampleCount == 48); }
  SUBCASE("samples stay on the line and inside the rectangle") {
    const Camera c1 = simple_camera("c1", 400, 400, 320, 240, 640, 480);
    const Camera c2 = look_at_camera("c2", Vec3(2, 0.5, -1), Vec3(0, 0, 4), 450, 640, 480);
    const Mat3 f = fundamental_matrix(c1, c2);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
      const Pixel px{rng.uniform(0, 640), rng.uniform(0, 480)};
      const auto s = epipolar_segment(f, px, c2.intrinsics);
      if (!s) continue;
      const EpipolarLine l = epipolar_line(f, px);
      const double scale = std::hypot(l.a, l.b);
      for (const Pixel& q : sample_epipolar(*s, kEpipolarSampleCount)) {
        CHECK(std::abs(l.residual(q)) / scale <= 1e-9);
        CHECK(q.u >= 0.0);
        CHECK(q.u < 640.0);
        CHECK(q.v >= 0.0);
        CHECK(q.v < 480.0);
      }
    }
  }
}

TEST_CASE("triangulation recovers synthetic points") {
  Rng rng(41);
  const Camera c1 = look_at_camera("c1", Vec3(-2, 1.5, -1), Vec3(0, 1, 3), 500, 640, 480);
  const Camera c2 = look_at_camera("c2", Vec3(2.5, 1.2, -0.5), Vec3(0, 1, 3), 520, 640, 480);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(rng.uniform(-1.5, 1.5), rng.uniform(0.2, 2.2), rng.uniform(2.0, 5.0));
    const Vec3 in1 = c1.world_to_camera(p);
    const Vec3 in2 = c2.world_to_camera(p);
    if (in1.z() <= 0.1 || in2.z() <= 0.1) continue;
    const auto result = triangulate(c1, project(c1, in1), c2, project(c2, in2));
    CHECK((result.point_world - p).norm() <= 1e-6);
    CHECK(result.max_reprojection_error_px <= 1e-6);
  }
}

TEST_CASE("triangulation rejects near-parallel rays") {
  const Camera c1 = simple_camera("c1", 400, 400, 320, 240, 640, 480);
  const Camera c2 =
      simple_camera("c2", 400, 400, 320, 240, 640, 480, Mat3::Identity(), Vec3(0, 0, -1));
  // Camera 2 sits directly behind camera 1; the principal rays coincide.
  CHECK_THROWS_AS(triangulate(c1, Pixel{320, 240}, c2, Pixel{320, 240}), Error);
  try {
    triangulate(c1, Pixel{320, 240}, c2, Pixel{320, 240});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NearParallelRays);
  }
}
