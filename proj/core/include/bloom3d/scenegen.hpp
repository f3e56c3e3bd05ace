#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bloom3d/detection.hpp"
#include "bloom3d/geometry.hpp"
#include "bloom3d/heatmap.hpp"
#include "bloom3d/raster.hpp"

namespace bloom3d {

/// Placement could not satisfy the separation constraints within the retry
/// budget, or the spec is otherwise unsatisfiable.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

class SplitError : public std::runtime_error {
 public:
  explicit SplitError(const std::string& what) : std::runtime_error(what) {}
};

struct IntRange {
  int lo = 0, hi = 0;  // inclusive
};
struct RealRange {
  double lo = 0.0, hi = 0.0;
};

enum class BackgroundStyle { field, plain };

/// A flower placed verbatim instead of sampled; used to pin exact
/// ground-truth positions in fixtures.
struct FixedFlower {
  Point3 center;
  double radius_m = 0.03;
};

/// Parameters of one procedural scene. Identical spec + rig render to
/// bit-identical samples.
struct SceneSpec {
  std::uint64_t seed = 0;
  int n_bushes = 3;
  IntRange flowers_per_bush{2, 4};
  double z_near = 0.4;  // meters
  double z_far = 6.0;
  RealRange flower_radius_m{0.02, 0.04};
  double lateral_extent_m = 1.6;
  BackgroundStyle background_style = BackgroundStyle::field;
  double min_center_separation_px = 24.0;
  std::vector<FixedFlower> fixed_flowers;

  void validate() const;
};

/// Ground truth for one flower. Visibility means the eye's depth raster at
/// the rounded center still holds this flower's depth (nothing nearer
/// covered it).
struct FlowerAnnotation {
  int id = 0;
  Point3 center3;
  PixelPoint left_px;
  PixelPoint right_px;
  double depth_m = 0.0;
  double projected_radius_px = 0.0;
  bool visible_left = false;
  bool visible_right = false;
};

/// One stereo scene with labels. Depth rasters are in meters, 0 = no
/// surface.
struct Sample {
  RgbImage left_image;
  RgbImage right_image;
  FloatPlane left_depth;
  FloatPlane right_depth;
  std::vector<FlowerAnnotation> annotations;
  StereoRig rig;
  std::uint64_t scene_seed = 0;
};

/// Stereo-consistent photometric augmentation. Every effect draws its
/// parameters once per call and applies them with identical image-space
/// geometry to both eyes.
struct AugmentSpec {
  IntRange brightness_delta{0, 0};
  RealRange contrast_gain{1.0, 1.0};
  double noise_sigma = 0.0;
  bool sunflare = false;
  bool rain = false;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Split { train, val, test };

const char* to_string(Split s);
Split split_from_string(const std::string& name);  // throws std::out_of_range

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct SampleEntry {
  int id = 0;
  Split split = Split::train;
  std::string left, right, left_depth, right_depth, annotations;  // relative
};

struct DatasetManifest {
  std::uint64_t master_seed = 0;
  StereoRig rig;
  SplitRatios ratios;
  std::vector<SampleEntry> samples;
};

/// The rig the synthetic dataset is generated with: 640x480, focal pixel
/// override 1000 px, baseline 65 mm.
StereoRig default_dataset_rig();
SceneSpec default_scene_spec();

/// Renders both eyes of a scene: a textured backdrop (field style), green
/// foliage blob clusters and radially shaded pink flower discs, composited
/// far-to-near with per-eye projection; the z-buffer becomes the depth
/// raster. Flower centers are kept separated (and their discs
/// non-overlapping) in both views by rejection sampling.
/// Throws GenerationError when placement fails after bounded retries.
Sample render_scene(const SceneSpec& spec, const StereoRig& rig);

/// Returns an augmented copy; annotations and depth rasters are unchanged.
Sample augment(const Sample& sample, const AugmentSpec& aug);

/// Randomly permutes samples with the given seed and assigns contiguous
/// train/val/test runs; floor rule, remainders go to train.
/// Throws SplitError on invalid ratios or fewer than 3 samples.
DatasetManifest split_dataset(const DatasetManifest& manifest,
                              const SplitRatios& ratios, std::uint64_t seed);

/// Read handle over a dataset directory; samples load lazily.
class Dataset {
 public:
  static Dataset open(const std::string& dir);
  const DatasetManifest& manifest() const { return manifest_; }
  const std::string& dir() const { return dir_; }
  const SampleEntry& entry(int id) const;
  Sample load_sample(int id) const;
  std::vector<FlowerAnnotation> load_annotations(int id) const;

 private:
  std::string dir_;
  DatasetManifest manifest_;
};

/// Per-split depth histogram over annotation depths; edges must be strictly
/// increasing, counts are per half-open bucket [e_k, e_{k+1}).
std::vector<long> depth_histogram(const Dataset& dataset, Split split,
                                  const std::vector<double>& edges);

/// Canonical relative file paths for a sample id.
SampleEntry make_sample_entry(int id, Split split);

/// Streaming writers used by generation (samples can be written as they are
/// rendered) plus the whole-dataset convenience used in tests.
void write_manifest(const DatasetManifest& manifest, const std::string& dir);
DatasetManifest read_manifest(const std::string& dir);
void write_sample(const std::string& dir, const SampleEntry& entry,
                  const Sample& sample);
void write_dataset(const DatasetManifest& manifest,
                   const std::vector<Sample>& samples, const std::string& dir);
Dataset read_dataset(const std::string& dir);

void write_annotations_jsonl(const std::string& path,
                             const std::vector<FlowerAnnotation>& annotations);
std::vector<FlowerAnnotation> read_annotations_jsonl(const std::string& path);

/// Ground-truth-derived detections (left eye, confidence 1.0); the oracle
/// side of every detector-vs-oracle comparison.
std::vector<Detection> oracle_detections(
    const std::vector<FlowerAnnotation>& annotations, double tau_m);

/// Encoder inputs for one eye; skips flowers not visible in that eye.
std::vector<EncodedPoint> encoded_points(
    const std::vector<FlowerAnnotation>& annotations, Eye eye);

}  // namespace bloom3d
