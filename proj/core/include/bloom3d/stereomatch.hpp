#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bloom3d/detection.hpp"
#include "bloom3d/geometry.hpp"
#include "bloom3d/raster.hpp"

namespace bloom3d {

/// Correlation score of a constant (or, for NCCorr, all-zero) patch is
/// undefined; signals a textureless template or window.
class DegenerateMatchError : public std::domain_error {
 public:
  explicit DegenerateMatchError(const std::string& what)
      : std::domain_error(what) {}
};

/// No usable position in the search strip (e.g. point too close to the
/// image edge, or every window degenerate).
class NoMatchError : public std::runtime_error {
 public:
  explicit NoMatchError(const std::string& what) : std::runtime_error(what) {}
};

enum class MatchMethod { nccorr, nccoef };
enum class BorderPolicy { replicate_pad, reject };

inline const char* to_string(MatchMethod m) {
  return m == MatchMethod::nccorr ? "nccorr" : "nccoef";
}

struct MatchConfig {
  int template_size = 32;  // even, >= 8
  MatchMethod method = MatchMethod::nccoef;
  double z_min = 0.4;  // meters; bounds the disparity strip
  double z_max = 6.0;
  int upscale_factor = 4;  // 1 = integer-pixel result
  int refine_halfwidth_px = 2;
  int vertical_tolerance_rows = 0;
  BorderPolicy border_policy = BorderPolicy::replicate_pad;

  void validate() const;
};

struct MatchResult {
  double right_u = 0.0;  // sub-pixel matched column in the right image
  int row = 0;
  double score = 0.0;
  double disparity = 0.0;  // u_left - right_u, > 0
  double depth_m = 0.0;    // always triangulate_depth(rig, disparity)
  MatchMethod method = MatchMethod::nccoef;
  bool refine_fallback = false;  // refinement hit the image edge, coarse kept
};

enum class MatchStatus { ok, no_match, degenerate };

inline const char* to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::ok: return "ok";
    case MatchStatus::no_match: return "no_match";
    default: return "degenerate";
  }
}

/// Per-detection outcome of estimate_depths; failures are recorded, never
/// dropped.
struct MatchRecord {
  Detection detection;
  std::optional<MatchResult> result;
  MatchStatus status = MatchStatus::ok;
};

/// Fixed integer-weighted grayscale: (299 r + 587 g + 114 b) / 1000, so
/// conversions are identical on every platform.
BytePlane to_grayscale(const RgbImage& image);

/// size x size patch of gray values as doubles; the nominal center pixel is
/// at offset size/2. replicate_pad clamps coordinates, reject throws
/// NoMatchError when the patch leaves the image.
DoublePlane extract_patch(const BytePlane& gray, int center_x, int center_y,
                          int size, BorderPolicy policy);

/// Plain normalized cross-correlation: sum(T*W) / sqrt(sum T^2 * sum W^2).
/// Throws DegenerateMatchError when either energy is zero.
double nccorr_score(const DoublePlane& templ, const DoublePlane& window);

/// Mean-subtracted variant (correlation coefficient); invariant to positive
/// affine intensity changes. Throws DegenerateMatchError on zero variance.
double nccoef_score(const DoublePlane& templ, const DoublePlane& window);

/// Scores of the template against windows centered at (center_x - d, row)
/// for every integer d in [d_lo, d_hi]. This is the sliding-sums fast path
/// used by search_scanline; window sums come from integral images, the
/// cross term is computed directly. A missing entry means the window was
/// degenerate or its center fell outside the image. Must agree with scoring
/// extract_patch + nccorr_score/nccoef_score per position to 1e-9.
std::vector<std::optional<double>> strip_scores(const BytePlane& right_gray,
                                                const DoublePlane& templ,
                                                int center_x, int row, int d_lo,
                                                int d_hi, MatchMethod method,
                                                BorderPolicy policy);

/// Scans the depth-bounded strip on the epipolar scanline (rows within
/// cfg.vertical_tolerance_rows of the point's row), picks the score argmax
/// (ties: smallest disparity, then nearest row), then applies
/// refine_subpixel. Throws NoMatchError / DegenerateMatchError.
MatchResult search_scanline(const RgbImage& left, const RgbImage& right,
                            const PixelPoint& left_pt, const StereoRig& rig,
                            const MatchConfig& cfg);

/// Re-scores the match on a 1/upscale_factor grid across +-
/// refine_halfwidth_px around the coarse position, sampling the right image
/// bilinearly. The coarse offset itself is one of the candidates, so the
/// refined score never drops below the coarse score. Falls back to the
/// coarse result (flagged) when the neighborhood leaves the image.
MatchResult refine_subpixel(const RgbImage& left, const RgbImage& right,
                            const PixelPoint& left_pt, const MatchResult& coarse,
                            const StereoRig& rig, const MatchConfig& cfg);

/// Runs search + refine + triangulation for every detection, optionally in
/// parallel. Results are index-aligned with the input and independent of
/// scheduling.
std::vector<MatchRecord> estimate_depths(const RgbImage& left,
                                         const RgbImage& right,
                                         const std::vector<Detection>& detections,
                                         const StereoRig& rig,
                                         const MatchConfig& cfg, int jobs = 1);

/// JSONL records {u_left, v_left, right_u, score, disparity, depth_m,
/// method, status}; failed matches keep their status and carry nulls for
/// the match fields.
void write_match_records_jsonl(const std::string& path,
                               const std::vector<MatchRecord>& records);
std::vector<MatchRecord> read_match_records_jsonl(const std::string& path);

}  // namespace bloom3d
