#include "bloom3d/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "bloom3d/rng.hpp"
#include "test_util.hpp"

using namespace bloom3d;
using bloom3d::testing::example_rig;

TEST_CASE("project: on-axis point lands on the principal point") {
  const StereoRig rig = example_rig();
  const PixelPoint left = project(rig, Point3{0, 0, 2}, Eye::left);
  CHECK(left.u == doctest::Approx(320.0).epsilon(1e-12));
  CHECK(left.v == doctest::Approx(240.0).epsilon(1e-12));
}

TEST_CASE("project: right eye is shifted by f*b/z") {
  const StereoRig rig = example_rig();
  // 1000 * 0.065 / 2 = 32.5 px
  const PixelPoint right = project(rig, Point3{0, 0, 2}, Eye::right);
  CHECK(right.u == doctest::Approx(287.5).epsilon(1e-12));
  CHECK(right.v == doctest::Approx(240.0).epsilon(1e-12));
}

TEST_CASE("project: point behind the camera is a domain error") {
  const StereoRig rig = example_rig();
  CHECK_THROWS_AS(project(rig, Point3{0, 0, -1}, Eye::left), std::domain_error);
  CHECK_THROWS_AS(project(rig, Point3{0, 0, 0}, Eye::left), std::domain_error);
}

TEST_CASE("disparity_of_depth hand values") {
  const StereoRig rig = example_rig();
  CHECK(disparity_of_depth(rig, 2.0) == doctest::Approx(32.5).epsilon(1e-12));
  CHECK(disparity_of_depth(rig, 1.0) == doctest::Approx(65.0).epsilon(1e-12));
  CHECK_THROWS_AS(disparity_of_depth(rig, 0.0), std::domain_error);
}

TEST_CASE("triangulate_depth hand values") {
  const StereoRig rig = example_rig();
  CHECK(triangulate_depth(rig, 32.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(triangulate_depth(rig, 65.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(triangulate_depth(rig, 0.0), std::domain_error);
  CHECK_THROWS_AS(triangulate_depth(rig, -3.0), std::domain_error);
}

TEST_CASE("backproject hand values and principal point") {
  const StereoRig rig = example_rig();
  const Point3 p = backproject(rig, PixelPoint{320, 240}, 2.0);
  CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.z == doctest::Approx(2.0).epsilon(1e-12));
  const Point3 q = backproject(rig, PixelPoint{420, 240}, 2.0);
  CHECK(q.x == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(q.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(backproject(rig, PixelPoint{0, 0}, 0.0), std::domain_error);
}

TEST_CASE("disparity_bounds hand values") {
  const StereoRig rig = example_rig();
  const auto [d_min, d_max] = disparity_bounds(rig, 0.25, 8.0);
  CHECK(d_min == doctest::Approx(8.125).epsilon(1e-12));
  CHECK(d_max == doctest::Approx(260.0).epsilon(1e-12));
  const auto [a, b] = disparity_bounds(rig, 1.0, 2.0);
  CHECK(a == doctest::Approx(32.5).epsilon(1e-12));
  CHECK(b == doctest::Approx(65.0).epsilon(1e-12));
  CHECK_THROWS_AS(disparity_bounds(rig, 2.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(disparity_bounds(rig, 3.0, 2.0), std::domain_error);
}

TEST_CASE("round-trip: triangulate(disparity(z)) == z to 1e-9 relative") {
  const StereoRig rig = example_rig();
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.uniform(0.1, 100.0);
    const double back = triangulate_depth(rig, disparity_of_depth(rig, z));
    CHECK(std::abs(back - z) / z <= 1e-9);
  }
}

TEST_CASE("projection consistency: u_left - u_right equals the disparity") {
  const StereoRig rig = example_rig();
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Point3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.2, 20)};
    const PixelPoint l = project(rig, p, Eye::left);
    const PixelPoint r = project(rig, p, Eye::right);
    CHECK(l.u - r.u == doctest::Approx(disparity_of_depth(rig, p.z)).epsilon(1e-12));
    CHECK(l.v == r.v);
  }
}

TEST_CASE("triangulate_depth is strictly decreasing in disparity") {
  const StereoRig rig = example_rig();
  double prev = triangulate_depth(rig, 0.5);
  for (double d = 1.0; d <= 300.0; d += 0.5) {
    const double z = triangulate_depth(rig, d);
    CHECK(z < prev);
    prev = z;
  }
}

TEST_CASE("backproject/project round-trip within 1e-9 px") {
  const StereoRig rig = example_rig();
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const PixelPoint q{rng.uniform(0, 639), rng.uniform(0, 479)};
    const double z = rng.uniform(0.1, 50.0);
    const PixelPoint back = project(rig, backproject(rig, q, z), Eye::left);
    CHECK(std::abs(back.u - q.u) <= 1e-9);
    CHECK(std::abs(back.v - q.v) <= 1e-9);
  }
}

TEST_CASE("focal_px derives from physical quantities unless overridden") {
  CameraIntrinsics in;
  in.focal_length_mm = 26.0;
  in.pixel_pitch_mm = 0.325;
  in.focal_px_override.reset();
  CHECK(in.focal_px() == doctest::Approx(80.0).epsilon(1e-12));
  in.focal_px_override = 1000.0;
  CHECK(in.focal_px() == 1000.0);
}

TEST_CASE("validation rejects out-of-range intrinsics and rigs") {
  StereoRig rig = example_rig();
  CHECK_NOTHROW(rig.validate());
  rig.baseline_m = 0.0;
  CHECK_THROWS_AS(rig.validate(), std::invalid_argument);
  rig = example_rig();
  rig.intrinsics.cx = 640.0;  // must be < width
  CHECK_THROWS_AS(rig.validate(), std::invalid_argument);
  rig = example_rig();
  rig.intrinsics.pixel_pitch_mm = 0.0;
  CHECK_THROWS_AS(rig.validate(), std::invalid_argument);
}
