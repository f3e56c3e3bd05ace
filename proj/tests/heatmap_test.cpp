#include "bloom3d/heatmap.hpp"

#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "bloom3d/rng.hpp"

using namespace bloom3d;

namespace {

const SigmaLaw kLaw{};  // k = 8, clamp [1.5, 16]

// Points pairwise separated by at least min_sep (Euclidean), kept away from
// the borders so thresholded supports stay in frame.
std::vector<EncodedPoint> random_separated_points(Rng& rng, int w, int h,
                                                  double min_sep, int margin) {
  std::vector<EncodedPoint> pts;
  const int target = static_cast<int>(rng.uniform_int(1, 8));
  int guard = 0;
  while (static_cast<int>(pts.size()) < target && ++guard < 4000) {
    EncodedPoint p;
    p.center = PixelPoint{rng.uniform(margin, w - 1.0 - margin),
                          rng.uniform(margin, h - 1.0 - margin)};
    p.depth_m = rng.uniform(0.3, 8.0);
    bool ok = true;
    for (const auto& q : pts) {
      const double d = std::hypot(p.center.u - q.center.u, p.center.v - q.center.v);
      if (d < min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("classify_by_depth: threshold and tie rule") {
  CHECK(classify_by_depth(1.0, 2.0) == FlowerClass::near);
  CHECK(classify_by_depth(2.0, 2.0) == FlowerClass::distant);  // tie -> distant
  CHECK(classify_by_depth(5.0, 2.0) == FlowerClass::distant);
  CHECK_THROWS_AS(classify_by_depth(0.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(classify_by_depth(-1.0, 2.0), std::domain_error);
}

TEST_CASE("sigma law: inverse proportionality and clamping") {
  CHECK(kLaw.sigma_for_depth(1.0) == doctest::Approx(8.0));
  CHECK(kLaw.sigma_for_depth(2.0) == doctest::Approx(4.0));
  CHECK(kLaw.sigma_for_depth(1.0) == doctest::Approx(2.0 * kLaw.sigma_for_depth(2.0)));
  CHECK(kLaw.sigma_for_depth(0.1) == doctest::Approx(16.0));   // clamped high
  CHECK(kLaw.sigma_for_depth(100.0) == doctest::Approx(1.5));  // clamped low
  for (double z1 = 0.6; z1 < 5.0; z1 += 0.3) {
    CHECK(kLaw.sigma_for_depth(z1) > kLaw.sigma_for_depth(z1 + 0.3));
  }
  SigmaLaw bad;
  bad.sigma_min = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("encode: empty annotation set gives pure background") {
  const HeatmapStack stack = encode_heatmaps({}, 64, 48, 2.0, kLaw);
  for (const float v : stack.near.data) CHECK(v == 0.0f);
  for (const float v : stack.distant.data) CHECK(v == 0.0f);
  for (const float v : stack.background.data) CHECK(v == 1.0f);
}

TEST_CASE("encode: peak 1.0 at the center, class channel by depth") {
  std::vector<EncodedPoint> pts{{PixelPoint{100, 100}, 1.0}};
  const HeatmapStack stack = encode_heatmaps(pts, 200, 200, 2.0, kLaw);
  CHECK(stack.near.at(100, 100) == 1.0f);
  CHECK(stack.distant.at(100, 100) == 0.0f);
  CHECK(stack.background.at(100, 100) == 0.0f);
  // sigma 8 at depth 1: one sigma away the value is exp(-0.5)
  CHECK(stack.near.at(108, 100) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
}

TEST_CASE("encode: flower exactly at tau goes to the distant channel") {
  std::vector<EncodedPoint> pts{{PixelPoint{50, 50}, 2.0}};
  const HeatmapStack stack = encode_heatmaps(pts, 100, 100, 2.0, kLaw);
  CHECK(stack.near.at(50, 50) == 0.0f);
  CHECK(stack.distant.at(50, 50) == 1.0f);
}

TEST_CASE("encode: out-of-bounds centers are skipped") {
  std::vector<EncodedPoint> pts{{PixelPoint{-10, 5}, 1.0}, {PixelPoint{5, 500}, 1.0}};
  const HeatmapStack stack = encode_heatmaps(pts, 64, 64, 2.0, kLaw);
  for (const float v : stack.near.data) CHECK(v == 0.0f);
}

TEST_CASE("channel coherence: background + max(near, distant) == 1 exactly") {
  Rng rng(21);
  const auto pts = random_separated_points(rng, 160, 120, 4.0, 4);
  const HeatmapStack stack = encode_heatmaps(pts, 160, 120, 2.0, kLaw);
  for (std::size_t i = 0; i < stack.background.data.size(); ++i) {
    const float m = std::max(stack.near.data[i], stack.distant.data[i]);
    CHECK(stack.background.data[i] + m == 1.0f);
    CHECK(stack.background.data[i] == 1.0f - m);
  }
}

TEST_CASE("decode: single peak recovered with confidence 1") {
  SigmaLaw law;
  law.k = 3.0;  // sigma 3 at depth 1
  std::vector<EncodedPoint> pts{{PixelPoint{40, 30}, 1.0}};
  const HeatmapStack stack = encode_heatmaps(pts, 80, 60, 2.0, law);
  const auto dets = decode_heatmaps(stack, 0.51);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].cls == FlowerClass::near);
  CHECK(dets[0].confidence == doctest::Approx(1.0));
  CHECK(std::abs(dets[0].position.u - 40.0) <= 0.5);
  CHECK(std::abs(dets[0].position.v - 30.0) <= 0.5);
}

TEST_CASE("decode: everything below threshold decodes to nothing") {
  HeatmapStack stack;
  stack.near = FloatPlane(32, 32, 0.3f);
  stack.distant = FloatPlane(32, 32, 0.5f);
  stack.background = FloatPlane(32, 32, 0.5f);
  CHECK(decode_heatmaps(stack, 0.51).empty());
  CHECK_THROWS_AS(decode_heatmaps(stack, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(decode_heatmaps(stack, 1.0), std::invalid_argument);
}

TEST_CASE("decode: two peaks 20 px apart with sigma 2 stay separate") {
  SigmaLaw law;
  law.k = 2.0;
  std::vector<EncodedPoint> pts{{PixelPoint{30, 40}, 1.0}, {PixelPoint{50, 40}, 1.0}};
  const HeatmapStack stack = encode_heatmaps(pts, 100, 80, 2.0, law);
  CHECK(decode_heatmaps(stack, 0.51).size() == 2);
}

TEST_CASE("decode: components in both class channels stay independent") {
  SigmaLaw law;
  law.k = 3.0;
  std::vector<EncodedPoint> pts{{PixelPoint{40, 30}, 1.0},   // near
                                {PixelPoint{41, 31}, 5.0}};  // distant, overlapping
  const HeatmapStack stack = encode_heatmaps(pts, 80, 60, 2.0, law);
  const auto dets = decode_heatmaps(stack, 0.51);
  CHECK(dets.size() == 2);
}

TEST_CASE("encode/decode round-trip recovers separated annotation sets") {
  Rng rng(22);
  for (int iter = 0; iter < 20; ++iter) {
    const auto pts =
        random_separated_points(rng, 640, 480, 6.0 * kLaw.sigma_max, 24);
    const HeatmapStack stack = encode_heatmaps(pts, 640, 480, 2.0, kLaw);
    const auto dets = decode_heatmaps(stack, 0.51);
    REQUIRE(dets.size() == pts.size());
    for (const auto& p : pts) {
      bool found = false;
      for (const auto& d : dets) {
        if (std::abs(d.position.u - p.center.u) <= 1.0 &&
            std::abs(d.position.v - p.center.v) <= 1.0) {
          CHECK(d.cls == classify_by_depth(p.depth_m, 2.0));
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("depth scaling: alpha = 1/8 and exact inversion") {
  CHECK(scale_depth(4.0) == 0.5);
  CHECK(scale_depth(0.0) == 0.0);
  CHECK(unscale_depth(0.5) == 4.0);
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(0.0, 10.0);
    CHECK(unscale_depth(scale_depth(x)) == doctest::Approx(x).epsilon(1e-15));
  }
}
