#include "bloom3d/scenegen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "bloom3d/image_io.hpp"
#include "bloom3d/stereomatch.hpp"
#include "test_util.hpp"

using namespace bloom3d;
using bloom3d::testing::example_rig;
using bloom3d::testing::TempDir;

namespace {

SceneSpec single_fixed_flower_spec(double x, double y, double z,
                                   double radius = 0.03) {
  SceneSpec spec;
  spec.seed = 5;
  spec.n_bushes = 0;
  spec.background_style = BackgroundStyle::plain;
  spec.fixed_flowers = {FixedFlower{Point3{x, y, z}, radius}};
  return spec;
}

}  // namespace

TEST_CASE("render_scene: fixed flower at (0,0,2) gets exact annotations") {
  const StereoRig rig = example_rig();
  const Sample s = render_scene(single_fixed_flower_spec(0, 0, 2), rig);
  REQUIRE(s.annotations.size() == 1);
  const FlowerAnnotation& a = s.annotations[0];
  CHECK(a.left_px.u == doctest::Approx(320.0).epsilon(1e-12));
  CHECK(a.left_px.v == doctest::Approx(240.0).epsilon(1e-12));
  CHECK(a.right_px.u == doctest::Approx(287.5).epsilon(1e-12));
  CHECK(a.right_px.v == doctest::Approx(240.0).epsilon(1e-12));
  CHECK(a.depth_m == doctest::Approx(2.0));
  CHECK(a.projected_radius_px == doctest::Approx(15.0));
  CHECK(a.visible_left);
  CHECK(a.visible_right);
  // z-buffer agreement at the rounded center
  CHECK(std::abs(s.left_depth.at(320, 240) - 2.0) <= 1e-3);
  CHECK(std::abs(s.right_depth.at(288, 240) - 2.0) <= 1e-3);
}

TEST_CASE("render_scene is deterministic: same spec, bit-identical sample") {
  const StereoRig rig = example_rig();
  SceneSpec spec = default_scene_spec();
  spec.seed = 77;
  const Sample a = render_scene(spec, rig);
  const Sample b = render_scene(spec, rig);
  CHECK(a.left_image == b.left_image);
  CHECK(a.right_image == b.right_image);
  CHECK(a.left_depth == b.left_depth);
  CHECK(a.right_depth == b.right_depth);
  REQUIRE(a.annotations.size() == b.annotations.size());
  for (std::size_t i = 0; i < a.annotations.size(); ++i) {
    CHECK(a.annotations[i].left_px.u == b.annotations[i].left_px.u);
    CHECK(a.annotations[i].depth_m == b.annotations[i].depth_m);
  }

  SceneSpec other = spec;
  other.seed = 78;
  CHECK(render_scene(other, rig).left_image != a.left_image);
}

TEST_CASE("render_scene: ground-truth disparity consistency") {
  const StereoRig rig = default_dataset_rig();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SceneSpec spec = default_scene_spec();
    spec.seed = seed;
    const Sample s = render_scene(spec, rig);
    CHECK(!s.annotations.empty());
    for (const FlowerAnnotation& a : s.annotations) {
      const double d = disparity_of_depth(rig, a.depth_m);
      CHECK(std::abs((a.left_px.u - a.right_px.u) - d) <= 1e-6);
      CHECK(a.left_px.v == a.right_px.v);
    }
  }
}

TEST_CASE("render_scene: occlusion flips the visibility flag") {
  // Two flowers on the same optical ray; the near one hides the far one.
  SceneSpec spec = single_fixed_flower_spec(0, 0, 3.0);
  spec.fixed_flowers.push_back(FixedFlower{Point3{0, 0, 1.5}, 0.03});
  const Sample s = render_scene(spec, example_rig());
  REQUIRE(s.annotations.size() == 2);
  CHECK_FALSE(s.annotations[0].visible_left);  // z = 3.0, occluded
  CHECK(s.annotations[1].visible_left);        // z = 1.5, on top
  CHECK(std::abs(s.left_depth.at(320, 240) - 1.5) <= 1e-3);
}

TEST_CASE("render_scene: pairwise separation holds in the left view") {
  const StereoRig rig = default_dataset_rig();
  SceneSpec spec = default_scene_spec();
  spec.seed = 99;
  const Sample s = render_scene(spec, rig);
  for (std::size_t i = 0; i < s.annotations.size(); ++i) {
    for (std::size_t j = i + 1; j < s.annotations.size(); ++j) {
      const double d = std::hypot(
          s.annotations[i].left_px.u - s.annotations[j].left_px.u,
          s.annotations[i].left_px.v - s.annotations[j].left_px.v);
      CHECK(d >= spec.min_center_separation_px);
    }
  }
}

TEST_CASE("render_scene: unsatisfiable separation raises GenerationError") {
  const StereoRig rig = example_rig();
  SceneSpec spec;
  spec.seed = 1;
  spec.n_bushes = 1;
  spec.flowers_per_bush = {3, 3};
  spec.min_center_separation_px = 5000.0;
  CHECK_THROWS_AS(render_scene(spec, rig), GenerationError);
}

TEST_CASE("render_scene validates its spec") {
  SceneSpec spec;
  spec.z_near = 2.0;
  spec.z_far = 1.0;
  CHECK_THROWS_AS(render_scene(spec, example_rig()), std::invalid_argument);
  SceneSpec bad_radius;
  bad_radius.flower_radius_m = {0.0, 0.01};
  CHECK_THROWS_AS(render_scene(bad_radius, example_rig()), std::invalid_argument);
}

TEST_CASE("augment: all effects off is the identity") {
  const Sample s = render_scene(single_fixed_flower_spec(0.1, 0, 1.5), example_rig());
  AugmentSpec aug;  // defaults: everything off
  const Sample a = augment(s, aug);
  CHECK(a.left_image == s.left_image);
  CHECK(a.right_image == s.right_image);
  CHECK(a.left_depth == s.left_depth);
}

TEST_CASE("augment: brightness shifts both eyes by the same delta") {
  SceneSpec spec = default_scene_spec();
  spec.seed = 4;
  const Sample s = render_scene(spec, default_dataset_rig());
  AugmentSpec aug;
  aug.brightness_delta = {20, 20};
  aug.seed = 9;
  const Sample a = augment(s, aug);
  REQUIRE(a.annotations.size() == s.annotations.size());
  int checked = 0;
  for (std::size_t i = 0; i < s.left_image.data.size(); ++i) {
    if (s.left_image.data[i] <= 230 && s.right_image.data[i] <= 230) {
      CHECK(a.left_image.data[i] - s.left_image.data[i] == 20);
      CHECK(a.right_image.data[i] - s.right_image.data[i] == 20);
      ++checked;
    }
  }
  CHECK(checked > 1000);
  CHECK(a.left_depth == s.left_depth);
}

TEST_CASE("augment: NCCoef at the true offset is stable under brightness") {
  // depth chosen so the true disparity is the integer 65/2 = 32 px ... use
  // z = 65/32 m so windows land on the pixel grid.
  const StereoRig rig = example_rig();
  const double z = rig.baseline_m * rig.intrinsics.focal_px() / 32.0;
  const Sample s = render_scene(single_fixed_flower_spec(0, 0, z), rig);
  REQUIRE(s.annotations.size() == 1);
  const int cu = static_cast<int>(std::llround(s.annotations[0].left_px.u));
  const int cv = static_cast<int>(std::llround(s.annotations[0].left_px.v));

  AugmentSpec aug;
  aug.brightness_delta = {20, 20};
  aug.seed = 10;
  const Sample a = augment(s, aug);

  const auto score_of = [&](const Sample& smp) {
    const BytePlane lg = to_grayscale(smp.left_image);
    const BytePlane rg = to_grayscale(smp.right_image);
    const DoublePlane t = extract_patch(lg, cu, cv, 32, BorderPolicy::replicate_pad);
    const DoublePlane w =
        extract_patch(rg, cu - 32, cv, 32, BorderPolicy::replicate_pad);
    return nccoef_score(t, w);
  };
  CHECK(std::abs(score_of(a) - score_of(s)) < 1e-3);
}

TEST_CASE("augment: each effect changes pixels but not labels") {
  SceneSpec spec = default_scene_spec();
  spec.seed = 6;
  const Sample s = render_scene(spec, default_dataset_rig());
  AugmentSpec aug;
  aug.brightness_delta = {-25, 25};
  aug.contrast_gain = {0.8, 1.25};
  aug.noise_sigma = 3.0;
  aug.sunflare = true;
  aug.rain = true;
  aug.seed = 11;
  const Sample a = augment(s, aug);
  CHECK(a.left_image != s.left_image);
  CHECK(a.left_depth == s.left_depth);
  CHECK(a.annotations.size() == s.annotations.size());
  // deterministic given the seed
  const Sample b = augment(s, aug);
  CHECK(a.left_image == b.left_image);
  CHECK(a.right_image == b.right_image);
  CHECK_THROWS_AS(augment(s, AugmentSpec{{0, 0}, {0.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("split_dataset: paper ratios and the floor rule") {
  DatasetManifest m;
  m.rig = example_rig();
  for (int i = 0; i < 1000; ++i) m.samples.push_back(make_sample_entry(i, Split::train));

  const DatasetManifest split = split_dataset(m, SplitRatios{}, 42);
  int train = 0, val = 0, test = 0;
  for (const auto& e : split.samples) {
    if (e.split == Split::train) ++train;
    if (e.split == Split::val) ++val;
    if (e.split == Split::test) ++test;
  }
  CHECK(train == 700);
  CHECK(val == 150);
  CHECK(test == 150);

  // identical seed, identical assignment; different seed differs somewhere
  const DatasetManifest again = split_dataset(m, SplitRatios{}, 42);
  bool same = true, differs = false;
  const DatasetManifest other = split_dataset(m, SplitRatios{}, 43);
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    same = same && split.samples[i].split == again.samples[i].split;
    differs = differs || split.samples[i].split != other.samples[i].split;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("split_dataset: remainders go to train") {
  DatasetManifest m;
  m.rig = example_rig();
  for (int i = 0; i < 10; ++i) m.samples.push_back(make_sample_entry(i, Split::train));
  const DatasetManifest split = split_dataset(m, SplitRatios{}, 1);
  int train = 0, val = 0, test = 0;
  for (const auto& e : split.samples) {
    if (e.split == Split::train) ++train;
    if (e.split == Split::val) ++val;
    if (e.split == Split::test) ++test;
  }
  CHECK(train == 8);
  CHECK(val == 1);
  CHECK(test == 1);
}

TEST_CASE("split_dataset rejects bad inputs") {
  DatasetManifest m;
  m.rig = example_rig();
  for (int i = 0; i < 10; ++i) m.samples.push_back(make_sample_entry(i, Split::train));
  CHECK_THROWS_AS(split_dataset(m, SplitRatios{0.5, 0.5, 0.5}, 1), SplitError);
  CHECK_THROWS_AS(split_dataset(m, SplitRatios{-0.1, 0.6, 0.5}, 1), SplitError);
  DatasetManifest tiny;
  tiny.rig = example_rig();
  tiny.samples.push_back(make_sample_entry(0, Split::train));
  CHECK_THROWS_AS(split_dataset(tiny, SplitRatios{}, 1), SplitError);
}

TEST_CASE("dataset round-trip: rasters and annotations survive disk") {
  TempDir dir("ds");
  const StereoRig rig = example_rig();
  std::vector<Sample> samples;
  DatasetManifest manifest;
  manifest.master_seed = 7;
  manifest.rig = rig;
  for (int i = 0; i < 3; ++i) {
    SceneSpec spec = default_scene_spec();
    spec.seed = 100 + static_cast<std::uint64_t>(i);
    spec.n_bushes = 1;
    samples.push_back(render_scene(spec, rig));
    manifest.samples.push_back(
        make_sample_entry(i, i == 0 ? Split::train : i == 1 ? Split::val : Split::test));
  }
  write_dataset(manifest, samples, dir.str());

  const Dataset ds = read_dataset(dir.str());
  CHECK(ds.manifest().master_seed == 7);
  CHECK(ds.manifest().rig.intrinsics.focal_px() == rig.intrinsics.focal_px());
  for (int i = 0; i < 3; ++i) {
    const Sample back = ds.load_sample(i);
    CHECK(back.left_image == samples[i].left_image);
    CHECK(back.right_image == samples[i].right_image);
    CHECK(back.left_depth == samples[i].left_depth);
    CHECK(back.right_depth == samples[i].right_depth);
    REQUIRE(back.annotations.size() == samples[i].annotations.size());
    for (std::size_t k = 0; k < back.annotations.size(); ++k) {
      const auto& a = back.annotations[k];
      const auto& b = samples[i].annotations[k];
      CHECK(a.id == b.id);
      CHECK(a.center3.x == b.center3.x);
      CHECK(a.center3.y == b.center3.y);
      CHECK(a.center3.z == b.center3.z);
      CHECK(a.left_px.u == b.left_px.u);
      CHECK(a.left_px.v == b.left_px.v);
      CHECK(a.right_px.u == b.right_px.u);
      CHECK(a.depth_m == b.depth_m);
      CHECK(a.projected_radius_px == b.projected_radius_px);
      CHECK(a.visible_left == b.visible_left);
      CHECK(a.visible_right == b.visible_right);
    }
  }
}

TEST_CASE("dataset errors: truncated and missing files are reported") {
  TempDir dir("dse");
  const StereoRig rig = example_rig();
  DatasetManifest manifest;
  manifest.rig = rig;
  manifest.samples.push_back(make_sample_entry(0, Split::test));
  write_dataset(manifest, {render_scene(single_fixed_flower_spec(0, 0, 2), rig)},
                dir.str());

  const Dataset ds = read_dataset(dir.str());
  // truncate the depth raster
  const auto depth_path = dir.path() / ds.entry(0).left_depth;
  std::filesystem::resize_file(depth_path, 64);
  CHECK_THROWS_AS(ds.load_sample(0), ParseError);

  // remove an image; the error must name the missing path
  const auto left_path = dir.path() / ds.entry(0).left;
  std::filesystem::remove(left_path);
  try {
    ds.load_sample(0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(ds.entry(0).left) != std::string::npos);
  }
}

TEST_CASE("depth_histogram buckets annotation depths per split") {
  TempDir dir("dh");
  const StereoRig rig = example_rig();
  DatasetManifest manifest;
  manifest.rig = rig;
  std::vector<Sample> samples;
  // one train sample with a flower at 2.5 m, plus val/test fodder
  samples.push_back(render_scene(single_fixed_flower_spec(0, 0, 2.5), rig));
  samples.push_back(render_scene(single_fixed_flower_spec(0, 0, 1.0), rig));
  samples.push_back(render_scene(single_fixed_flower_spec(0, 0, 3.0), rig));
  manifest.samples.push_back(make_sample_entry(0, Split::train));
  manifest.samples.push_back(make_sample_entry(1, Split::val));
  manifest.samples.push_back(make_sample_entry(2, Split::val));
  write_dataset(manifest, samples, dir.str());
  const Dataset ds = read_dataset(dir.str());

  CHECK(depth_histogram(ds, Split::train, {0, 2, 4}) == std::vector<long>{0, 1});
  CHECK(depth_histogram(ds, Split::val, {0, 2, 4}) == std::vector<long>{1, 1});
  // empty split -> all zeros
  CHECK(depth_histogram(ds, Split::test, {0, 2, 4}) == std::vector<long>{0, 0});
  CHECK_THROWS_AS(depth_histogram(ds, Split::train, {2, 2, 4}),
                  std::invalid_argument);
  CHECK_THROWS_AS(split_from_string("holdout"), std::out_of_range);
}

TEST_CASE("oracle detections carry ground truth positions and classes") {
  const StereoRig rig = example_rig();
  SceneSpec spec = single_fixed_flower_spec(0, 0, 1.0);
  spec.fixed_flowers.push_back(FixedFlower{Point3{0.3, 0.1, 3.0}, 0.03});
  const Sample s = render_scene(spec, rig);
  const auto dets = oracle_detections(s.annotations, 2.0);
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].cls == FlowerClass::near);
  CHECK(dets[1].cls == FlowerClass::distant);
  CHECK(dets[0].confidence == 1.0);
  CHECK(dets[0].position.u == s.annotations[0].left_px.u);

  const auto pts = encoded_points(s.annotations, Eye::left);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].depth_m == 1.0);
}
