#include "bloom3d/stereomatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <json.hpp>

#include "bloom3d/image_io.hpp"
#include "bloom3d/parallel.hpp"

namespace bloom3d {

void MatchConfig::validate() const {
  if (template_size < 8 || template_size % 2 != 0) {
    throw std::invalid_argument("MatchConfig: template_size must be even and >= 8");
  }
  if (upscale_factor < 1) {
    throw std::invalid_argument("MatchConfig: upscale_factor must be >= 1");
  }
  if (refine_halfwidth_px < 0) {
    throw std::invalid_argument("MatchConfig: refine_halfwidth_px must be >= 0");
  }
  if (vertical_tolerance_rows < 0) {
    throw std::invalid_argument("MatchConfig: vertical_tolerance_rows must be >= 0");
  }
  if (!(z_min > 0.0) || !(z_min < z_max)) {
    throw std::invalid_argument("MatchConfig: need 0 < z_min < z_max");
  }
}

BytePlane to_grayscale(const RgbImage& image) {
  BytePlane gray(image.width, image.height, 0);
  const std::uint8_t* p = image.data.data();
  for (std::size_t i = 0; i < gray.data.size(); ++i, p += 3) {
    gray.data[i] = static_cast<std::uint8_t>(
        (299 * p[0] + 587 * p[1] + 114 * p[2]) / 1000);
  }
  return gray;
}

DoublePlane extract_patch(const BytePlane& gray, int center_x, int center_y,
                          int size, BorderPolicy policy) {
  const int half = size / 2;
  const int x0 = center_x - half;
  const int y0 = center_y - half;
  if (policy == BorderPolicy::reject &&
      (x0 < 0 || y0 < 0 || x0 + size > gray.width || y0 + size > gray.height)) {
    throw NoMatchError("patch leaves the image under border_policy=reject");
  }
  DoublePlane patch(size, size, 0.0);
  for (int y = 0; y < size; ++y) {
    const int sy = std::clamp(y0 + y, 0, gray.height - 1);
    for (int x = 0; x < size; ++x) {
      const int sx = std::clamp(x0 + x, 0, gray.width - 1);
      patch.at(x, y) = gray.at(sx, sy);
    }
  }
  return patch;
}

namespace {

struct PatchSums {
  double sum = 0.0;
  double sum_sq = 0.0;
  double n = 0.0;
};

PatchSums sums_of(const DoublePlane& p) {
  PatchSums s;
  for (const double v : p.data) {
    s.sum += v;
    s.sum_sq += v * v;
  }
  s.n = static_cast<double>(p.data.size());
  return s;
}

// Single scoring formula shared by the naive scorers, the sliding fast path
// and sub-pixel refinement, so identical sums give bit-identical scores.
// nullopt = degenerate (zero energy / zero variance).
std::optional<double> score_from_sums(double cross, const PatchSums& t,
                                      const PatchSums& w, MatchMethod method) {
  if (method == MatchMethod::nccorr) {
    if (t.sum_sq <= 0.0 || w.sum_sq <= 0.0) return std::nullopt;
    return cross / std::sqrt(t.sum_sq * w.sum_sq);
  }
  const double var_t = t.sum_sq - t.sum * t.sum / t.n;
  const double var_w = w.sum_sq - w.sum * w.sum / w.n;
  if (var_t <= 0.0 || var_w <= 0.0) return std::nullopt;
  const double num = cross - t.sum * w.sum / t.n;
  return num / std::sqrt(var_t * var_w);
}

std::optional<double> score_patches(const DoublePlane& templ,
                                    const DoublePlane& window,
                                    MatchMethod method) {
  double cross = 0.0;
  for (std::size_t i = 0; i < templ.data.size(); ++i) {
    cross += templ.data[i] * window.data[i];
  }
  return score_from_sums(cross, sums_of(templ), sums_of(window), method);
}

void require_same_shape(const DoublePlane& templ, const DoublePlane& window) {
  if (!templ.same_size(window) || templ.data.empty()) {
    throw std::invalid_argument("template and window dimensions must match");
  }
}

// Prefix-sum tables of pixel values and squares; entry (x, y) covers the
// rectangle [0,x) x [0,y). Exact in uint64 for 8-bit inputs.
struct IntegralImages {
  int width = 0, height = 0;
  std::vector<std::uint64_t> s1, s2;

  explicit IntegralImages(const BytePlane& img)
      : width(img.width + 1),
        height(img.height + 1),
        s1(static_cast<std::size_t>(width) * height, 0),
        s2(static_cast<std::size_t>(width) * height, 0) {
    for (int y = 0; y < img.height; ++y) {
      std::uint64_t row1 = 0, row2 = 0;
      for (int x = 0; x < img.width; ++x) {
        const std::uint64_t v = img.at(x, y);
        row1 += v;
        row2 += v * v;
        const std::size_t i = static_cast<std::size_t>(y + 1) * width + (x + 1);
        s1[i] = s1[i - width] + row1;
        s2[i] = s2[i - width] + row2;
      }
    }
  }

  // Sums over [x0, x0+w) x [y0, y0+h), which must be in bounds.
  PatchSums window_sums(int x0, int y0, int w, int h) const {
    const auto at = [&](const std::vector<std::uint64_t>& s, int x, int y) {
      return s[static_cast<std::size_t>(y) * width + x];
    };
    PatchSums out;
    out.sum = static_cast<double>(at(s1, x0 + w, y0 + h) - at(s1, x0, y0 + h) -
                                  at(s1, x0 + w, y0) + at(s1, x0, y0));
    out.sum_sq = static_cast<double>(at(s2, x0 + w, y0 + h) - at(s2, x0, y0 + h) -
                                     at(s2, x0 + w, y0) + at(s2, x0, y0));
    out.n = static_cast<double>(w) * h;
    return out;
  }
};

MatchResult make_result(const StereoRig& rig, const PixelPoint& left_pt,
                        int row, double score, double disparity,
                        MatchMethod method) {
  MatchResult r;
  r.right_u = left_pt.u - disparity;
  r.row = row;
  r.score = score;
  r.disparity = disparity;
  r.depth_m = triangulate_depth(rig, disparity);
  r.method = method;
  return r;
}

bool template_is_degenerate(const PatchSums& t, MatchMethod method) {
  if (method == MatchMethod::nccorr) return t.sum_sq <= 0.0;
  return t.sum_sq - t.sum * t.sum / t.n <= 0.0;
}

double bilerp_row(const BytePlane& img, double x, int y) {
  const int ix = static_cast<int>(std::floor(x));
  const double fx = x - ix;
  const double a = img.at(ix, y);
  if (fx == 0.0) return a;
  const double b = img.at(ix + 1, y);
  return a + fx * (b - a);
}

}  // namespace

double nccorr_score(const DoublePlane& templ, const DoublePlane& window) {
  require_same_shape(templ, window);
  const auto s = score_patches(templ, window, MatchMethod::nccorr);
  if (!s) throw DegenerateMatchError("nccorr: zero-energy template or window");
  return *s;
}

double nccoef_score(const DoublePlane& templ, const DoublePlane& window) {
  require_same_shape(templ, window);
  const auto s = score_patches(templ, window, MatchMethod::nccoef);
  if (!s) throw DegenerateMatchError("nccoef: zero-variance template or window");
  return *s;
}

std::vector<std::optional<double>> strip_scores(const BytePlane& right_gray,
                                                const DoublePlane& templ,
                                                int center_x, int row, int d_lo,
                                                int d_hi, MatchMethod method,
                                                BorderPolicy policy) {
  if (d_hi < d_lo) return {};
  const int size = templ.width;
  const int half = size / 2;
  const PatchSums t = sums_of(templ);
  std::vector<std::optional<double>> scores(
      static_cast<std::size_t>(d_hi - d_lo) + 1);
  if (template_is_degenerate(t, method)) return scores;  // all missing

  const IntegralImages integrals(right_gray);
  for (int d = d_lo; d <= d_hi; ++d) {
    const int wx = center_x - d;
    auto& slot = scores[static_cast<std::size_t>(d - d_lo)];
    if (wx < 0 || wx >= right_gray.width || row < 0 || row >= right_gray.height) {
      continue;  // window center off the image
    }
    const int x0 = wx - half;
    const int y0 = row - half;
    const bool inside = x0 >= 0 && y0 >= 0 && x0 + size <= right_gray.width &&
                        y0 + size <= right_gray.height;
    if (inside) {
      const PatchSums w = integrals.window_sums(x0, y0, size, size);
      double cross = 0.0;
      for (int y = 0; y < size; ++y) {
        const std::uint8_t* src =
            &right_gray.data[static_cast<std::size_t>(y0 + y) * right_gray.width + x0];
        const double* tp = &templ.data[static_cast<std::size_t>(y) * size];
        for (int x = 0; x < size; ++x) cross += tp[x] * src[x];
      }
      slot = score_from_sums(cross, t, w, method);
    } else if (policy == BorderPolicy::replicate_pad) {
      const DoublePlane window = extract_patch(right_gray, wx, row, size, policy);
      double cross = 0.0;
      for (std::size_t i = 0; i < templ.data.size(); ++i) {
        cross += templ.data[i] * window.data[i];
      }
      slot = score_from_sums(cross, t, sums_of(window), method);
    }
    // reject policy: out-of-bounds windows stay missing
  }
  return scores;
}

namespace {

struct Candidate {
  double score = 0.0;
  int disparity = 0;
  int row_rank = 0;  // distance from the point's own row
  int row = 0;
  bool valid = false;

  bool better_than(const Candidate& o) const {
    if (!o.valid) return true;
    if (score != o.score) return score > o.score;
    if (disparity != o.disparity) return disparity < o.disparity;
    return row_rank < o.row_rank;
  }
};

MatchResult search_scanline_gray(const BytePlane& left_gray,
                                 const BytePlane& right_gray,
                                 const PixelPoint& left_pt, const StereoRig& rig,
                                 const MatchConfig& cfg) {
  cfg.validate();
  rig.validate();
  const int ci = static_cast<int>(std::llround(left_pt.u));
  const int ri = static_cast<int>(std::llround(left_pt.v));
  if (ci < 0 || ci >= left_gray.width || ri < 0 || ri >= left_gray.height) {
    throw std::invalid_argument("search_scanline: left point out of bounds");
  }

  const DoublePlane templ =
      extract_patch(left_gray, ci, ri, cfg.template_size, cfg.border_policy);
  if (template_is_degenerate(sums_of(templ), cfg.method)) {
    throw DegenerateMatchError("search_scanline: textureless template");
  }

  const auto [d_min, d_max] = disparity_bounds(rig, cfg.z_min, cfg.z_max);
  const int d_lo = static_cast<int>(std::ceil(d_min - 1e-9));
  const int d_hi = static_cast<int>(std::floor(d_max + 1e-9));
  if (d_lo > d_hi) {
    throw NoMatchError("search_scanline: empty disparity range");
  }

  Candidate best;
  for (int dr = 0; dr <= cfg.vertical_tolerance_rows; ++dr) {
    for (const int row : {ri - dr, ri + dr}) {
      if (row < 0 || row >= right_gray.height) continue;
      const auto scores = strip_scores(right_gray, templ, ci, row, d_lo, d_hi,
                                       cfg.method, cfg.border_policy);
      for (int d = d_lo; d <= d_hi; ++d) {
        const auto& s = scores[static_cast<std::size_t>(d - d_lo)];
        if (!s) continue;
        Candidate c{*s, d, dr, row, true};
        if (c.better_than(best)) best = c;
      }
      if (dr == 0) break;
    }
  }
  if (!best.valid) {
    throw NoMatchError(
        "search_scanline: no scorable window in the strip (empty or degenerate)");
  }
  return make_result(rig, left_pt, best.row, best.score,
                     static_cast<double>(best.disparity), cfg.method);
}

MatchResult refine_subpixel_gray(const BytePlane& left_gray,
                                 const BytePlane& right_gray,
                                 const PixelPoint& left_pt,
                                 const MatchResult& coarse, const StereoRig& rig,
                                 const MatchConfig& cfg) {
  cfg.validate();
  if (cfg.upscale_factor == 1) return coarse;

  const int ci = static_cast<int>(std::llround(left_pt.u));
  const int ri = static_cast<int>(std::llround(left_pt.v));
  const int half = cfg.template_size / 2;
  const int hw = cfg.refine_halfwidth_px;
  const int cx = ci - static_cast<int>(std::llround(coarse.disparity));
  const int row = coarse.row;

  // Bilinear sampling reads one pixel past the window on the right; fall
  // back to the coarse result when the neighborhood leaves the image.
  const bool fits = cx - half - hw >= 0 && cx + half + hw < right_gray.width &&
                    row - half >= 0 && row + half - 1 < right_gray.height;
  if (!fits) {
    MatchResult fallback = coarse;
    fallback.refine_fallback = true;
    return fallback;
  }

  const DoublePlane templ =
      extract_patch(left_gray, ci, ri, cfg.template_size, cfg.border_policy);
  const PatchSums t = sums_of(templ);
  const int steps = hw * cfg.upscale_factor;
  const double inv_u = 1.0 / cfg.upscale_factor;

  double best_score = 0.0;
  double best_delta = 0.0;
  bool found = false;
  for (int m = 0; m <= 2 * steps; ++m) {
    // 0, -1, +1, -2, +2, ... so exact ties keep the coarse position
    const int k = (m % 2 == 1) ? -(m + 1) / 2 : m / 2;
    const double delta = k * inv_u;
    const double disparity = coarse.disparity - delta;
    if (!(disparity > 0.0)) continue;
    double cross = 0.0;
    PatchSums w;
    w.n = static_cast<double>(cfg.template_size) * cfg.template_size;
    for (int y = 0; y < cfg.template_size; ++y) {
      const int sy = row - half + y;
      for (int x = 0; x < cfg.template_size; ++x) {
        const double v = bilerp_row(right_gray, cx - half + x + delta, sy);
        w.sum += v;
        w.sum_sq += v * v;
        cross += templ.at(x, y) * v;
      }
    }
    const auto s = score_from_sums(cross, t, w, cfg.method);
    if (s && (!found || *s > best_score)) {
      best_score = *s;
      best_delta = delta;
      found = true;
    }
  }
  if (!found) {
    MatchResult fallback = coarse;
    fallback.refine_fallback = true;
    return fallback;
  }
  return make_result(rig, left_pt, row, best_score,
                     coarse.disparity - best_delta, cfg.method);
}

}  // namespace

MatchResult search_scanline(const RgbImage& left, const RgbImage& right,
                            const PixelPoint& left_pt, const StereoRig& rig,
                            const MatchConfig& cfg) {
  const BytePlane left_gray = to_grayscale(left);
  const BytePlane right_gray = to_grayscale(right);
  const MatchResult coarse =
      search_scanline_gray(left_gray, right_gray, left_pt, rig, cfg);
  return refine_subpixel_gray(left_gray, right_gray, left_pt, coarse, rig, cfg);
}

MatchResult refine_subpixel(const RgbImage& left, const RgbImage& right,
                            const PixelPoint& left_pt, const MatchResult& coarse,
                            const StereoRig& rig, const MatchConfig& cfg) {
  return refine_subpixel_gray(to_grayscale(left), to_grayscale(right), left_pt,
                              coarse, rig, cfg);
}

std::vector<MatchRecord> estimate_depths(const RgbImage& left,
                                         const RgbImage& right,
                                         const std::vector<Detection>& detections,
                                         const StereoRig& rig,
                                         const MatchConfig& cfg, int jobs) {
  const BytePlane left_gray = to_grayscale(left);
  const BytePlane right_gray = to_grayscale(right);
  std::vector<MatchRecord> records(detections.size());
  parallel_for(detections.size(), jobs, [&](std::size_t i) {
    MatchRecord& rec = records[i];
    rec.detection = detections[i];
    try {
      const MatchResult coarse = search_scanline_gray(
          left_gray, right_gray, detections[i].position, rig, cfg);
      rec.result = refine_subpixel_gray(left_gray, right_gray,
                                        detections[i].position, coarse, rig, cfg);
      rec.status = MatchStatus::ok;
    } catch (const DegenerateMatchError&) {
      rec.status = MatchStatus::degenerate;
    } catch (const NoMatchError&) {
      rec.status = MatchStatus::no_match;
    } catch (const std::invalid_argument&) {
      rec.status = MatchStatus::no_match;  // e.g. detection out of bounds
    }
  });
  return records;
}

void write_match_records_jsonl(const std::string& path,
                               const std::vector<MatchRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const MatchRecord& r : records) {
    nlohmann::json j{{"u_left", r.detection.position.u},
                     {"v_left", r.detection.position.v},
                     {"status", to_string(r.status)}};
    if (r.status == MatchStatus::ok && r.result) {
      j["right_u"] = r.result->right_u;
      j["score"] = r.result->score;
      j["disparity"] = r.result->disparity;
      j["depth_m"] = r.result->depth_m;
      j["method"] = to_string(r.result->method);
    } else {
      j["right_u"] = nullptr;
      j["score"] = nullptr;
      j["disparity"] = nullptr;
      j["depth_m"] = nullptr;
      j["method"] = nullptr;
    }
    out << j.dump() << "\n";
  }
}

// Note: the records only restore what the schema carries; detection class
// and confidence live in the sibling detections file.
std::vector<MatchRecord> read_match_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<MatchRecord> records;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      try {
        const nlohmann::json j = nlohmann::json::parse(line);
        MatchRecord r;
        r.detection.position =
            PixelPoint{j.at("u_left").get<double>(), j.at("v_left").get<double>()};
        const std::string status = j.at("status").get<std::string>();
        if (status == "ok") {
          r.status = MatchStatus::ok;
          MatchResult res;
          res.right_u = j.at("right_u").get<double>();
          res.score = j.at("score").get<double>();
          res.disparity = j.at("disparity").get<double>();
          res.depth_m = j.at("depth_m").get<double>();
          res.method = j.at("method").get<std::string>() == "nccorr"
                           ? MatchMethod::nccorr
                           : MatchMethod::nccoef;
          res.row = static_cast<int>(std::llround(r.detection.position.v));
          r.result = res;
        } else if (status == "no_match") {
          r.status = MatchStatus::no_match;
        } else if (status == "degenerate") {
          r.status = MatchStatus::degenerate;
        } else {
          throw ParseError(path, offset, "unknown status: " + status);
        }
        records.push_back(r);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path, offset, e.what());
      }
    }
    offset += line.size() + 1;
  }
  return records;
}

}  // namespace bloom3d
