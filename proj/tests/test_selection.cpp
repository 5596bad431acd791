#include <doctest.h>

#include "mvgaze/eval.hpp"
#include "mvgaze/gaze_selection.hpp"
#include "support/test_helpers.hpp"

using namespace mvgaze;
using namespace mvgaze::test;

TEST_CASE("gaze loss: frozen anchor values") {
  SUBCASE("perfect prediction at sigma 1 is zero") {
    const GazeVector g(0.4, -0.2, 1.0);
    CHECK(gaze_loss(g, 1.0, 2.5 * g).loss == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal prediction at sigma 1 is 0.5") {
    CHECK(gaze_loss(GazeVector(1, 0, 0), 1.0, GazeVector(0, 1, 0)).loss ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("zero vectors are rejected") {
    CHECK_THROWS_AS(gaze_loss(GazeVector::Zero(), 1.0, GazeVector(1, 0, 0)), Error);
  }
}

TEST_CASE("gaze loss: scale invariance in both arguments") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const GazeVector g(rng.normal(), rng.normal(), rng.normal());
    const GazeVector t(rng.normal(), rng.normal(), rng.normal());
    if (g.norm() < 1e-3 || t.norm() < 1e-3) continue;
    const double sigma = rng.uniform(0.2, 3.0);
    const double base = gaze_loss(g, sigma, t).loss;
    CHECK(gaze_loss(5.0 * g, sigma, t).loss == doctest::Approx(base).epsilon(1e-12));
    CHECK(gaze_loss(g, sigma, 0.03 * t).loss == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("gaze loss gradients match central finite differences") {
  Rng rng(7);
  const double h = 1e-5;
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    GazeVector g(rng.normal(), rng.normal(), rng.normal());
    GazeVector t(rng.normal(), rng.normal(), rng.normal());
    if (g.norm() < 0.1 || t.norm() < 0.1) continue;
    const double sigma = rng.uniform(0.2, 3.0);
    const GazeLossResult res = gaze_loss(g, sigma, t);

    for (int k = 0; k < 3; ++k) {
      GazeVector gp = g, gm = g;
      gp[k] += h;
      gm[k] -= h;
      const double fd = (gaze_loss(gp, sigma, t).loss - gaze_loss(gm, sigma, t).loss) / (2 * h);
      const double err = std::abs(res.d_g[k] - fd);
      CHECK(err <= 1e-4 * std::max({std::abs(res.d_g[k]), std::abs(fd), 1e-4}));
    }
    const double fd_sigma =
        (gaze_loss(g, sigma + h, t).loss - gaze_loss(g, sigma - h, t).loss) / (2 * h);
    CHECK(std::abs(res.d_sigma - fd_sigma) <=
          1e-4 * std::max({std::abs(res.d_sigma), std::abs(fd_sigma), 1e-4}));
    ++checked;
  }
  CHECK(checked > 800);
}

TEST_CASE("optimal sigma matches the 1-D grid-search oracle") {
  // For fixed cosine c, minimizing over sigma gives sigma* = sqrt(1 - c).
  const GazeVector g(1, 0, 0);
  const GazeVector t(0, 1, 0);  // cos = 0
  double best_sigma = 0.0, best_loss = 1e300;
  const int grid = 40000;
  for (int i = 1; i <= grid; ++i) {
    const double sigma = 4.0 * i / grid;
    const double loss = gaze_loss(g, sigma, t).loss;
    if (loss < best_loss) {
      best_loss = loss;
      best_sigma = sigma;
    }
  }
  CHECK(std::abs(best_sigma - 1.0) <= 4.0 / grid + 1e-12);
  // Stationarity of the analytic gradient at the optimum.
  CHECK(std::abs(gaze_loss(g, 1.0, t).d_sigma) <= 1e-12);
}

TEST_CASE("select_and_transfer: rotation transfer and ties") {
  const Camera cam1 = simple_camera("v1", 100, 100, 32, 24, 64, 48, rot_z(90.0));
  const Camera cam2 = simple_camera("v2", 100, 100, 32, 24, 64, 48, Mat3::Identity());

  SUBCASE("equal rotations copy the winning vector") {
    const Camera a = simple_camera("a", 100, 100, 32, 24, 64, 48, rot_y(25.0));
    const Camera b = simple_camera("b", 100, 100, 32, 24, 64, 48, rot_y(25.0));
    const GazePrediction p1{GazeVector(0.3, 0.1, 1.0), 0.2, "a"};
    const GazePrediction p2{GazeVector(-1.0, 0.5, 0.2), 0.9, "b"};
    const SelectionResult sel = select_and_transfer(p1, p2, a, b);
    CHECK(sel.chosen_view == "a");
    CHECK(sel.g_reference.isApprox(p1.g, 1e-12));
    CHECK(sel.g_primary.isApprox(p1.g, 1e-12));
    CHECK(sel.replaced_reference);
  }
  SUBCASE("Rz(90) rotates (1,0,0) to (0,1,0)") {
    // Reference wins; primary receives R1 R2^{-1} g2 with R1 = Rz(90).
    const GazePrediction p1{GazeVector(0.5, 0.5, 0.5), 0.8, "v1"};
    const GazePrediction p2{GazeVector(1, 0, 0), 0.1, "v2"};
    const SelectionResult sel = select_and_transfer(p1, p2, cam1, cam2);
    CHECK(sel.chosen_view == "v2");
    CHECK(sel.g_primary.isApprox(GazeVector(0, 1, 0), 1e-12));
  }
  SUBCASE("exact sigma tie keeps both predictions") {
    const GazePrediction p1{GazeVector(1, 0, 0), 0.5, "v1"};
    const GazePrediction p2{GazeVector(0, 0, 1), 0.5, "v2"};
    const SelectionResult sel = select_and_transfer(p1, p2, cam1, cam2);
    CHECK(sel.g_primary.isApprox(p1.g, 1e-15));
    CHECK(sel.g_reference.isApprox(p2.g, 1e-15));
    CHECK(!sel.replaced_primary);
    CHECK(!sel.replaced_reference);
  }
  SUBCASE("selection is idempotent") {
    const GazePrediction p1{GazeVector(0.2, 0.7, 0.4), 0.3, "v1"};
    const GazePrediction p2{GazeVector(0.9, -0.1, 0.3), 0.6, "v2"};
    const SelectionResult first = select_and_transfer(p1, p2, cam1, cam2);
    const GazePrediction q1{first.g_primary, first.chosen_sigma, "v1"};
    const GazePrediction q2{first.g_reference, first.chosen_sigma, "v2"};
    const SelectionResult second = select_and_transfer(q1, q2, cam1, cam2);
    CHECK(second.g_primary.isApprox(first.g_primary, 1e-12));
    CHECK(second.g_reference.isApprox(first.g_reference, 1e-12));
  }
}

TEST_CASE("transfer preserves norms and angular errors") {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const Camera cam1 =
        simple_camera("v1", 100, 100, 32, 24, 64, 48, random_rotation(rng),
                      Vec3(rng.normal(), rng.normal(), rng.normal()));
    const Camera cam2 =
        simple_camera("v2", 100, 100, 32, 24, 64, 48, random_rotation(rng),
                      Vec3(rng.normal(), rng.normal(), rng.normal()));
    const GazeVector g2(rng.normal(), rng.normal(), rng.normal());
    if (g2.norm() < 0.1) continue;
    const GazeVector gt_world(rng.normal(), rng.normal(), rng.normal());
    if (gt_world.norm() < 0.1) continue;

    const GazePrediction p1{GazeVector(1, 1, 1), 0.9, "v1"};
    const GazePrediction p2{g2, 0.1, "v2"};
    const SelectionResult sel = select_and_transfer(p1, p2, cam1, cam2);
    CHECK(std::abs(sel.g_primary.norm() - g2.norm()) <= 1e-12 * g2.norm());

    const GazeVector gt1 = cam1.extrinsics.R * gt_world;
    const GazeVector gt2 = cam2.extrinsics.R * gt_world;
    const double err_source = angular_error_deg(g2, gt2);
    const double err_transferred = angular_error_deg(sel.g_primary, gt1);
    CHECK(std::abs(err_source - err_transferred) <= 1e-9);
  }
}

TEST_CASE("aggregate_pairs picks the minimum-sigma pair") {
  auto make = [](double sigma, int ref_idx, int payload) {
    PairCandidate<int> c;
    c.selection.chosen_sigma = sigma;
    c.reference_camera_index = ref_idx;
    c.output = payload;
    return c;
  };
  SUBCASE("single pair returns itself") {
    const std::vector<PairCandidate<int>> pairs{make(0.4, 1, 7)};
    CHECK(aggregate_pairs(pairs).output == 7);
  }
  SUBCASE("planted minimum wins") {
    const std::vector<PairCandidate<int>> pairs{make(0.3, 1, 0), make(0.1, 2, 1), make(0.2, 3, 2),
                                                make(0.4, 4, 3), make(0.5, 5, 4)};
    CHECK(aggregate_pairs(pairs).output == 1);
  }
  SUBCASE("adding pairs never increases the selected sigma") {
    std::vector<PairCandidate<int>> pairs{make(0.5, 1, 0)};
    double last = aggregate_pairs(pairs).selection.chosen_sigma;
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      pairs.push_back(make(rng.uniform(0.05, 1.0), 2 + i, i));
      const double now = aggregate_pairs(pairs).selection.chosen_sigma;
      CHECK(now <= last);
      last = now;
    }
  }
  SUBCASE("ties break toward the lowest reference camera") {
    const std::vector<PairCandidate<int>> pairs{make(0.2, 5, 0), make(0.2, 2, 1), make(0.2, 9, 2)};
    CHECK(aggregate_pairs(pairs).output == 1);
  }
  SUBCASE("empty input throws") {
    const std::vector<PairCandidate<int>> pairs;
    CHECK_THROWS_AS(aggregate_pairs(pairs), Error);
  }
}
