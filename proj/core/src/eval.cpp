#include "bloom3d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bloom3d {

void MatchRule::validate() const {
  if (window_px < 0) {
    throw std::invalid_argument("MatchRule: window_px must be >= 0");
  }
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
    throw std::invalid_argument("MatchRule: confidence_threshold must be in (0,1)");
  }
}

namespace {

double chebyshev(const PixelPoint& a, const PixelPoint& b) {
  return std::max(std::abs(a.u - b.u), std::abs(a.v - b.v));
}

ClassMatches match_class(const std::vector<Detection>& preds,
                         const std::vector<GroundTruth>& gts, FlowerClass cls,
                         const MatchRule& rule) {
  std::vector<int> pred_idx;
  for (int i = 0; i < static_cast<int>(preds.size()); ++i) {
    if (preds[i].cls == cls && preds[i].confidence > rule.confidence_threshold) {
      pred_idx.push_back(i);
    }
  }
  // Descending confidence; index breaks ties so the order is total.
  std::stable_sort(pred_idx.begin(), pred_idx.end(), [&](int a, int b) {
    return preds[a].confidence > preds[b].confidence;
  });

  std::vector<int> gt_idx;
  for (int j = 0; j < static_cast<int>(gts.size()); ++j) {
    if (gts[j].cls == cls) gt_idx.push_back(j);
  }

  ClassMatches out;
  std::vector<bool> gt_taken(gts.size(), false);
  for (const int i : pred_idx) {
    int best_j = -1;
    double best_d = 0.0;
    for (const int j : gt_idx) {
      if (gt_taken[j]) continue;
      const double d = chebyshev(preds[i].position, gts[j].position);
      if (d > rule.window_px) continue;
      if (best_j < 0 || d < best_d) {
        best_j = j;
        best_d = d;
      }
    }
    if (best_j >= 0) {
      gt_taken[best_j] = true;
      out.tp_pairs.emplace_back(i, best_j);
    } else {
      out.fp_preds.push_back(i);
    }
  }
  for (const int j : gt_idx) {
    if (!gt_taken[j]) out.fn_gts.push_back(j);
  }
  return out;
}

ClassCounts counts_from(int tp, int fp, int fn) {
  ClassCounts c;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  c.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  c.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  c.f_score = c.precision + c.recall > 0.0
                  ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
                  : 0.0;
  return c;
}

}  // namespace

Matches match_detections(const std::vector<Detection>& preds,
                         const std::vector<GroundTruth>& gts,
                         const MatchRule& rule) {
  rule.validate();
  Matches m;
  m.near = match_class(preds, gts, FlowerClass::near, rule);
  m.distant = match_class(preds, gts, FlowerClass::distant, rule);
  return m;
}

DetectionReport detection_metrics(const Matches& matches) {
  DetectionReport report;
  const auto count = [](const ClassMatches& cm) {
    return counts_from(static_cast<int>(cm.tp_pairs.size()),
                       static_cast<int>(cm.fp_preds.size()),
                       static_cast<int>(cm.fn_gts.size()));
  };
  report.near = count(matches.near);
  report.distant = count(matches.distant);
  report.overall = counts_from(report.near.tp + report.distant.tp,
                               report.near.fp + report.distant.fp,
                               report.near.fn + report.distant.fn);
  return report;
}

DepthReport depth_mae(const std::vector<DepthRecord>& records,
                      const std::vector<double>& bucket_edges) {
  if (bucket_edges.size() >= 2 &&
      (!std::is_sorted(bucket_edges.begin(), bucket_edges.end()) ||
       std::adjacent_find(bucket_edges.begin(), bucket_edges.end()) !=
           bucket_edges.end())) {
    throw std::invalid_argument("depth_mae: bucket edges must be strictly increasing");
  }
  DepthReport report;
  report.bucket_edges = bucket_edges;
  const std::size_t n_buckets =
      bucket_edges.size() >= 2 ? bucket_edges.size() - 1 : 0;
  report.per_bucket_mae.assign(n_buckets, 0.0);
  report.per_bucket_n.assign(n_buckets, 0);

  double sum = 0.0;
  std::array<double, 2> class_sum{};
  std::vector<double> bucket_sum(n_buckets, 0.0);
  for (const DepthRecord& r : records) {
    if (!(r.gt_m > 0.0)) continue;  // MAE is defined on valid entries only
    const double err = std::abs(r.pred_m - r.gt_m);
    ++report.n_valid;
    sum += err;
    const int ci = r.cls == FlowerClass::near ? 0 : 1;
    class_sum[ci] += err;
    ++report.per_class_n[ci];
    if (n_buckets > 0) {
      const auto it =
          std::upper_bound(bucket_edges.begin(), bucket_edges.end(), r.gt_m);
      if (it != bucket_edges.begin() && it != bucket_edges.end()) {
        const auto b = static_cast<std::size_t>(it - bucket_edges.begin()) - 1;
        bucket_sum[b] += err;
        ++report.per_bucket_n[b];
      }
    }
  }
  if (report.n_valid > 0) {
    report.overall_mae = sum / report.n_valid;
  }
  for (int c = 0; c < 2; ++c) {
    if (report.per_class_n[c] > 0) {
      report.per_class_mae[c] = class_sum[c] / report.per_class_n[c];
    }
  }
  for (std::size_t b = 0; b < n_buckets; ++b) {
    if (report.per_bucket_n[b] > 0) {
      report.per_bucket_mae[b] = bucket_sum[b] / report.per_bucket_n[b];
    }
  }
  return report;
}

std::vector<GroundTruth> ground_truths(
    const std::vector<FlowerAnnotation>& annotations, double tau_m) {
  std::vector<GroundTruth> gts;
  for (const FlowerAnnotation& a : annotations) {
    if (!a.visible_left) continue;
    gts.push_back(GroundTruth{a.left_px, classify_by_depth(a.depth_m, tau_m),
                              a.depth_m});
  }
  return gts;
}

std::vector<DepthRecord> depth_records_for_sample(
    const std::vector<MatchRecord>& match_records,
    const std::vector<GroundTruth>& gts, const MatchRule& rule) {
  std::vector<Detection> preds;
  preds.reserve(match_records.size());
  for (const MatchRecord& mr : match_records) preds.push_back(mr.detection);
  const Matches matches = match_detections(preds, gts, rule);
  std::vector<DepthRecord> records;
  for (const FlowerClass cls : {FlowerClass::near, FlowerClass::distant}) {
    for (const auto& [pi, gi] : matches.of(cls).tp_pairs) {
      const MatchRecord& mr = match_records[static_cast<std::size_t>(pi)];
      if (mr.status != MatchStatus::ok || !mr.result) continue;
      records.push_back(DepthRecord{mr.result->depth_m, gts[gi].depth_m, cls});
    }
  }
  return records;
}

AttributionReport attribute_localization_error(
    const Sample& sample, const std::vector<Detection>& detector_preds,
    const std::vector<Detection>& oracle_pts, const StereoRig& rig,
    const MatchConfig& cfg, const MatchRule& rule, double tau_m) {
  AttributionReport report;
  const std::vector<GroundTruth> gts = ground_truths(sample.annotations, tau_m);

  const auto run = [&](const std::vector<Detection>& dets, double& mae_out,
                       int& n_out, int& failures_out) {
    const std::vector<MatchRecord> recs =
        estimate_depths(sample.left_image, sample.right_image, dets, rig, cfg);
    for (const MatchRecord& r : recs) {
      if (r.status != MatchStatus::ok) ++failures_out;
    }
    const std::vector<DepthRecord> records =
        depth_records_for_sample(recs, gts, rule);
    const DepthReport rep = depth_mae(records, {});
    n_out = rep.n_valid;
    mae_out = rep.overall_mae;
    return rep.has_data();
  };

  if (detector_preds.empty() || oracle_pts.empty()) return report;  // undefined
  const bool total_ok = run(detector_preds, report.total_mae,
                            report.n_detector_records, report.n_detector_failures);
  const bool oracle_ok = run(oracle_pts, report.oracle_mae,
                             report.n_oracle_records, report.n_oracle_failures);
  if (!total_ok || !oracle_ok) return report;
  report.valid = true;
  report.localization_contribution = report.total_mae - report.oracle_mae;
  return report;
}

BBox bbox_from_point(const PixelPoint& center, double depth_m) {
  if (!(depth_m > 0.0)) {
    throw std::domain_error("bbox_from_point: depth must be > 0");
  }
  return BBox{center, 60.0 / depth_m};
}

}  // namespace bloom3d
