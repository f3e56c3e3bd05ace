#pragma once

#include <array>
#include <optional>
#include <vector>

#include "bloom3d/detection.hpp"
#include "bloom3d/geometry.hpp"
#include "bloom3d/scenegen.hpp"
#include "bloom3d/stereomatch.hpp"

namespace bloom3d {

/// Spatially relaxed matching rule: a prediction above the confidence
/// threshold counts as a hit when it lands within a +-window_px Chebyshev
/// (square) window of a same-class ground-truth point.
struct MatchRule {
  int window_px = 5;
  double confidence_threshold = 0.51;

  void validate() const;
};

/// A ground-truth point as the evaluator sees it.
struct GroundTruth {
  PixelPoint position;
  FlowerClass cls = FlowerClass::near;
  double depth_m = 0.0;
};

/// One-to-one matching outcome for one class.
struct ClassMatches {
  std::vector<std::pair<int, int>> tp_pairs;  // (pred index, gt index)
  std::vector<int> fp_preds;
  std::vector<int> fn_gts;
};

struct Matches {
  ClassMatches near;
  ClassMatches distant;

  const ClassMatches& of(FlowerClass c) const {
    return c == FlowerClass::near ? near : distant;
  }
};

struct ClassCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 0.0;  // 0 when tp+fp == 0
  double recall = 0.0;     // 0 when tp+fn == 0
  double f_score = 0.0;    // harmonic mean, 0 when p+r == 0
};

struct DetectionReport {
  ClassCounts near;
  ClassCounts distant;
  ClassCounts overall;  // micro-aggregated over both classes
};

struct DepthRecord {
  double pred_m = 0.0;
  double gt_m = 0.0;
  FlowerClass cls = FlowerClass::near;
};

/// MAE over records with valid ground truth (gt > 0). n_valid == 0 marks an
/// empty report; the MAE fields are then meaningless and left at 0.
struct DepthReport {
  int n_valid = 0;
  double overall_mae = 0.0;
  std::array<double, 2> per_class_mae{};  // [near, distant]
  std::array<int, 2> per_class_n{};
  std::vector<double> bucket_edges;
  std::vector<double> per_bucket_mae;
  std::vector<int> per_bucket_n;

  bool has_data() const { return n_valid > 0; }
};

/// Error attribution (oracle-vs-detector): how much of the total depth
/// error the 2D localizer contributes. Signed; negative means the detector
/// points happened to match better than the ground-truth points.
struct AttributionReport {
  bool valid = false;
  double total_mae = 0.0;
  double oracle_mae = 0.0;
  double localization_contribution = 0.0;
  int n_detector_records = 0;
  int n_oracle_records = 0;
  int n_detector_failures = 0;
  int n_oracle_failures = 0;
};

/// Greedy one-to-one matching: predictions below the threshold are
/// discarded, the rest are matched in descending-confidence order to the
/// nearest unmatched same-class ground truth within the window.
Matches match_detections(const std::vector<Detection>& preds,
                         const std::vector<GroundTruth>& gts,
                         const MatchRule& rule);

DetectionReport detection_metrics(const Matches& matches);

/// Depth MAE overall, per class and per gt-depth bucket. Records with
/// gt <= 0 are excluded (and not counted in n_valid).
DepthReport depth_mae(const std::vector<DepthRecord>& records,
                      const std::vector<double>& bucket_edges);

/// Runs the matcher twice on one sample, from detector points and from
/// ground-truth points, and reports the difference of the two MAEs.
AttributionReport attribute_localization_error(
    const Sample& sample, const std::vector<Detection>& detector_preds,
    const std::vector<Detection>& oracle_pts, const StereoRig& rig,
    const MatchConfig& cfg, const MatchRule& rule, double tau_m);

/// Square bounding box around a point: side 60/depth pixels.
/// Throws std::domain_error when depth <= 0.
struct BBox {
  PixelPoint center;
  double side_px = 0.0;
};
BBox bbox_from_point(const PixelPoint& center, double depth_m);

/// Ground truths from a sample's annotations (left eye, visible only).
std::vector<GroundTruth> ground_truths(
    const std::vector<FlowerAnnotation>& annotations, double tau_m);

/// Pairs matched detections with their ground-truth depths to build depth
/// records from one sample's match results.
std::vector<DepthRecord> depth_records_for_sample(
    const std::vector<MatchRecord>& match_records,
    const std::vector<GroundTruth>& gts, const MatchRule& rule);

}  // namespace bloom3d
