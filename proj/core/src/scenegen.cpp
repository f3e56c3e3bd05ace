#include "bloom3d/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "bloom3d/image_io.hpp"
#include "bloom3d/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bloom3d {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Shading {
  std::array<int, 3> core{};
  std::array<int, 3> rim{};
  double petal_amp = 0.0;
  int petal_k = 0;
  double petal_phase = 0.0;
};

// A camera-facing disc at constant depth; flowers and foliage blobs alike.
struct Disc {
  Point3 center;
  double radius_m = 0.0;
  Shading shading;
};

struct PlacedFlower {
  Point3 center;
  double radius_m = 0.0;
  PixelPoint left;
  PixelPoint right;
  double radius_px = 0.0;
};

double cell_hash(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t s = seed ^ (static_cast<std::uint64_t>(ix) * 0x9e3779b97f4a7c15ULL) ^
                    (static_cast<std::uint64_t>(iy) * 0xc2b2ae3d27d4eb4fULL);
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  double tx = x - fx;
  double ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double v00 = cell_hash(seed, ix, iy);
  const double v10 = cell_hash(seed, ix + 1, iy);
  const double v01 = cell_hash(seed, ix, iy + 1);
  const double v11 = cell_hash(seed, ix + 1, iy + 1);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

std::uint8_t lerp_byte(int a, int b, double t) {
  const double v = a + (b - a) * t;
  return static_cast<std::uint8_t>(std::clamp<long>(std::llround(v), 0, 255));
}

void draw_backdrop(RgbImage& img, FloatPlane& depth, const StereoRig& rig,
                   Eye eye, double z_bg, std::uint64_t seed) {
  const double f = rig.intrinsics.focal_px();
  const double cx = rig.intrinsics.cx;
  const double cy = rig.intrinsics.cy;
  const double bx = eye == Eye::right ? rig.baseline_m : 0.0;
  const std::uint64_t seed2 = seed ^ 0x5bf03635e1a4c2d7ULL;
  for (int y = 0; y < img.height; ++y) {
    const double wy = (y - cy) * z_bg / f;
    for (int x = 0; x < img.width; ++x) {
      // Texture lives in world coordinates on the backdrop plane, so the
      // two eyes see the same pattern at the plane's disparity.
      const double wx = (x - cx) * z_bg / f + bx;
      const double v = 0.7 * value_noise(seed, wx * 18.0, wy * 18.0) +
                       0.3 * value_noise(seed2, wx * 71.0, wy * 71.0);
      img.set(x, y, lerp_byte(38, 118, v), lerp_byte(72, 122, v),
              lerp_byte(34, 64, v));
      depth.at(x, y) = static_cast<float>(z_bg);
    }
  }
}

void draw_disc(RgbImage& img, FloatPlane& depth, const StereoRig& rig, Eye eye,
               const Disc& disc) {
  const PixelPoint c = project(rig, disc.center, eye);
  const double rp =
      std::max(0.5, rig.intrinsics.focal_px() * disc.radius_m / disc.center.z);
  const int x0 = std::max(0, static_cast<int>(std::ceil(c.u - rp)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::floor(c.u + rp)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(c.v - rp)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(c.v + rp)));
  const double rp2 = rp * rp;
  const Shading& sh = disc.shading;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y - c.v;
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - c.u;
      const double d2 = dx * dx + dy * dy;
      if (d2 > rp2) continue;
      double t = std::sqrt(d2) / rp;
      if (sh.petal_amp > 0.0) {
        const double theta = std::atan2(dy, dx);
        t = std::clamp(
            t * (1.0 + sh.petal_amp * std::cos(sh.petal_k * theta + sh.petal_phase)),
            0.0, 1.0);
      }
      img.set(x, y, lerp_byte(sh.core[0], sh.rim[0], t),
              lerp_byte(sh.core[1], sh.rim[1], t),
              lerp_byte(sh.core[2], sh.rim[2], t));
      depth.at(x, y) = static_cast<float>(disc.center.z);
    }
  }
}

Shading flower_shading(Rng& rng) {
  Shading sh;
  sh.core = {static_cast<int>(rng.uniform_int(243, 255)),
             static_cast<int>(rng.uniform_int(85, 110)),
             static_cast<int>(rng.uniform_int(145, 165))};
  sh.rim = {static_cast<int>(rng.uniform_int(150, 180)),
            static_cast<int>(rng.uniform_int(25, 45)),
            static_cast<int>(rng.uniform_int(85, 110))};
  sh.petal_amp = rng.uniform(0.22, 0.33);
  sh.petal_k = static_cast<int>(rng.uniform_int(5, 7));
  sh.petal_phase = rng.uniform(0.0, 2.0 * kPi);
  return sh;
}

Shading foliage_shading(Rng& rng) {
  Shading sh;
  const int g = static_cast<int>(rng.uniform_int(110, 165));
  const int r = static_cast<int>(rng.uniform_int(30, 70));
  const int b = static_cast<int>(rng.uniform_int(30, 70));
  sh.core = {r, g, b};
  sh.rim = {r * 11 / 20, g * 11 / 20, b * 11 / 20};
  sh.petal_amp = rng.uniform(0.1, 0.2);
  sh.petal_k = static_cast<int>(rng.uniform_int(3, 5));
  sh.petal_phase = rng.uniform(0.0, 2.0 * kPi);
  return sh;
}

struct BushAnchor {
  Point3 center;
};

double dist2(double du, double dv) { return du * du + dv * dv; }

// Margins that keep a flower usable downstream: disc fully inside the
// frame, plus headroom for the 32 px template and sub-pixel refinement in
// both eyes.
bool in_margins(const PixelPoint& lp, const PixelPoint& rp, double r_px, int w,
                int h) {
  const double mu = std::max(r_px + 4.0, 26.0);
  const double mv = std::max(r_px + 4.0, 18.0);
  return lp.u >= mu && lp.u <= w - 1 - mu && lp.v >= mv && lp.v <= h - 1 - mv &&
         rp.u >= mu && rp.u <= w - 1 - mu;
}

bool separated(const PlacedFlower& a, const PixelPoint& lp, const PixelPoint& rp,
               double r_px, double min_sep) {
  const double need = std::max(min_sep, a.radius_px + r_px + 3.0);
  const double need2 = need * need;
  return dist2(lp.u - a.left.u, lp.v - a.left.v) >= need2 &&
         dist2(rp.u - a.right.u, rp.v - a.right.v) >= need2;
}

}  // namespace

void SceneSpec::validate() const {
  if (!(z_near > 0.0 && z_near < z_far)) {
    throw std::invalid_argument("SceneSpec: need 0 < z_near < z_far");
  }
  if (n_bushes < 0 || flowers_per_bush.lo < 0 ||
      flowers_per_bush.lo > flowers_per_bush.hi) {
    throw std::invalid_argument("SceneSpec: invalid bush/flower counts");
  }
  if (!(flower_radius_m.lo > 0.0) || flower_radius_m.lo > flower_radius_m.hi) {
    throw std::invalid_argument("SceneSpec: invalid flower radius range");
  }
  if (!(lateral_extent_m > 0.0)) {
    throw std::invalid_argument("SceneSpec: lateral_extent_m must be > 0");
  }
  if (min_center_separation_px < 0.0) {
    throw std::invalid_argument("SceneSpec: min_center_separation_px must be >= 0");
  }
  for (const FixedFlower& f : fixed_flowers) {
    if (!(f.center.z > 0.0) || !(f.radius_m > 0.0)) {
      throw std::invalid_argument("SceneSpec: fixed flowers need z > 0 and radius > 0");
    }
  }
}

void AugmentSpec::validate() const {
  if (brightness_delta.lo > brightness_delta.hi) {
    throw std::invalid_argument("AugmentSpec: invalid brightness range");
  }
  if (!(contrast_gain.lo > 0.0) || contrast_gain.lo > contrast_gain.hi) {
    throw std::invalid_argument("AugmentSpec: contrast gain must be positive");
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("AugmentSpec: noise_sigma must be >= 0");
  }
}

StereoRig default_dataset_rig() {
  StereoRig rig;
  rig.intrinsics.focal_length_mm = 26.0;
  rig.intrinsics.pixel_pitch_mm = 0.325;
  rig.intrinsics.focal_px_override = 1000.0;
  rig.intrinsics.cx = 320.0;
  rig.intrinsics.cy = 240.0;
  rig.intrinsics.width = 640;
  rig.intrinsics.height = 480;
  rig.baseline_m = 0.065;
  return rig;
}

SceneSpec default_scene_spec() { return SceneSpec{}; }

Sample render_scene(const SceneSpec& spec, const StereoRig& rig) {
  spec.validate();
  rig.validate();
  const int w = rig.intrinsics.width;
  const int h = rig.intrinsics.height;
  const double f = rig.intrinsics.focal_px();
  Rng rng(spec.seed);

  std::vector<PlacedFlower> flowers;
  std::vector<Disc> flower_discs;
  std::vector<Disc> foliage;
  std::vector<BushAnchor> anchors;

  auto place = [&](const Point3& c, double radius_m) {
    PlacedFlower pf;
    pf.center = c;
    pf.radius_m = radius_m;
    pf.left = project(rig, c, Eye::left);
    pf.right = project(rig, c, Eye::right);
    pf.radius_px = f * radius_m / c.z;
    flowers.push_back(pf);
  };

  for (const FixedFlower& ff : spec.fixed_flowers) place(ff.center, ff.radius_m);

  const double z_bush_lo = spec.z_near + 0.35;
  const double z_bush_hi = std::max(z_bush_lo + 0.05, spec.z_far - 0.15);
  constexpr int kRetries = 1000;

  for (int b = 0; b < spec.n_bushes; ++b) {
    // Bushes are laid out in depth rows: bush b draws its depth from the
    // b-th stratum of [z_bush_lo, z_bush_hi], so at most one bush crowds
    // the near field and placement stays satisfiable at every seed. When a
    // bush's flowers cannot be packed, the whole bush is re-anchored.
    const double stratum = (z_bush_hi - z_bush_lo) / spec.n_bushes;
    const double z_row_lo = z_bush_lo + stratum * b;
    const int k = static_cast<int>(
        rng.uniform_int(spec.flowers_per_bush.lo, spec.flowers_per_bush.hi));
    constexpr int kBushAttempts = 20;
    bool bush_done = false;
    for (int bush_try = 0; bush_try < kBushAttempts && !bush_done; ++bush_try) {
      // Anchor: picked in left-image coordinates and backprojected, so
      // bushes land in frame at every depth.
      BushAnchor anchor;
      bool anchored = false;
      for (int attempt = 0; attempt < kRetries && !anchored; ++attempt) {
        const double z_b = rng.uniform(z_row_lo, z_row_lo + stratum);
        const double u_lo = disparity_of_depth(rig, z_b) + 70.0;
        const double u_hi = w - 70.0;
        if (u_lo >= u_hi) continue;
        const double u = rng.uniform(u_lo, u_hi);
        const double v =
            rng.uniform(std::min(60.0, h / 4.0), h - std::min(60.0, h / 4.0));
        const Point3 c = backproject(rig, PixelPoint{u, v}, z_b);
        if (std::abs(c.x) > spec.lateral_extent_m) continue;
        anchor.center = c;
        anchored = true;
      }
      if (!anchored) continue;

      std::vector<PlacedFlower> bush_flowers;
      bool packed = true;
      for (int j = 0; j < k && packed; ++j) {
        packed = false;
        for (int attempt = 0; attempt < kRetries && !packed; ++attempt) {
          const double z_f = std::max(spec.z_near + 0.01,
                                      anchor.center.z - rng.uniform(0.06, 0.18));
          const double radius_m =
              rng.uniform(spec.flower_radius_m.lo, spec.flower_radius_m.hi);
          const double ang = rng.uniform(0.0, 2.0 * kPi);
          const double rad = 0.25 * std::sqrt(rng.uniform());
          const Point3 c{anchor.center.x + rad * std::cos(ang),
                         anchor.center.y + rad * std::sin(ang), z_f};
          if (std::abs(c.x) > spec.lateral_extent_m) continue;
          const PixelPoint lp = project(rig, c, Eye::left);
          const PixelPoint rp = project(rig, c, Eye::right);
          const double r_px = f * radius_m / z_f;
          if (!in_margins(lp, rp, r_px, w, h)) continue;
          bool ok = true;
          for (const PlacedFlower& prev : flowers) {
            if (!separated(prev, lp, rp, r_px, spec.min_center_separation_px)) {
              ok = false;
              break;
            }
          }
          for (const PlacedFlower& prev : bush_flowers) {
            if (!ok) break;
            if (!separated(prev, lp, rp, r_px, spec.min_center_separation_px)) {
              ok = false;
            }
          }
          if (!ok) continue;
          PlacedFlower pf;
          pf.center = c;
          pf.radius_m = radius_m;
          pf.left = lp;
          pf.right = rp;
          pf.radius_px = r_px;
          bush_flowers.push_back(pf);
          packed = true;
        }
      }
      if (!packed) continue;  // re-anchor the bush
      anchors.push_back(anchor);
      for (const PlacedFlower& pf : bush_flowers) flowers.push_back(pf);
      bush_done = true;
    }
    if (!bush_done) {
      throw GenerationError(
          "render_scene: separation constraint unsatisfiable after retries");
    }
  }

  for (const PlacedFlower& pf : flowers) {
    flower_discs.push_back(Disc{pf.center, pf.radius_m, flower_shading(rng)});
  }

  // Foliage sits behind its bush's flowers (larger z), so flowers stay on
  // the camera-facing side. A blob that would cover a farther flower's
  // center in either eye is resampled: otherwise flowers get stereo
  // shadows (visible left, hidden right) that no matcher could resolve.
  const double z_backdrop = spec.z_far * 1.25 + 0.5;
  const auto covers_a_flower = [&](const Point3& c, double radius_m) {
    const double rp = f * radius_m / c.z + 6.0;
    for (const PlacedFlower& pf : flowers) {
      if (c.z >= pf.center.z) continue;  // blob behind the flower
      const PixelPoint bl = project(rig, c, Eye::left);
      const PixelPoint br = project(rig, c, Eye::right);
      if (dist2(bl.u - pf.left.u, bl.v - pf.left.v) < rp * rp ||
          dist2(br.u - pf.right.u, br.v - pf.right.v) < rp * rp) {
        return true;
      }
    }
    return false;
  };
  for (const BushAnchor& anchor : anchors) {
    const int blobs = static_cast<int>(rng.uniform_int(16, 28));
    for (int i = 0; i < blobs; ++i) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        const double z = std::min(anchor.center.z + rng.uniform(0.05, 0.45),
                                  z_backdrop - 0.2);
        const double ang = rng.uniform(0.0, 2.0 * kPi);
        const double rad = 0.3 * std::sqrt(rng.uniform());
        const Point3 c{anchor.center.x + rad * std::cos(ang),
                       anchor.center.y + rad * std::sin(ang), z};
        const double radius_m = rng.uniform(0.05, 0.11);
        if (covers_a_flower(c, radius_m)) continue;  // blob dropped on give-up
        foliage.push_back(Disc{c, radius_m, foliage_shading(rng)});
        break;
      }
    }
  }

  std::vector<Disc> prims;
  prims.reserve(foliage.size() + flower_discs.size());
  prims.insert(prims.end(), foliage.begin(), foliage.end());
  prims.insert(prims.end(), flower_discs.begin(), flower_discs.end());
  std::stable_sort(prims.begin(), prims.end(),
                   [](const Disc& a, const Disc& b) { return a.center.z > b.center.z; });

  Sample sample;
  sample.rig = rig;
  sample.scene_seed = spec.seed;
  sample.left_image = RgbImage(w, h);
  sample.right_image = RgbImage(w, h);
  sample.left_depth = FloatPlane(w, h, 0.0f);
  sample.right_depth = FloatPlane(w, h, 0.0f);

  for (const Eye eye : {Eye::left, Eye::right}) {
    RgbImage& img = eye == Eye::left ? sample.left_image : sample.right_image;
    FloatPlane& depth = eye == Eye::left ? sample.left_depth : sample.right_depth;
    if (spec.background_style == BackgroundStyle::field) {
      draw_backdrop(img, depth, rig, eye, z_backdrop, spec.seed);
    } else {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) img.set(x, y, 170, 178, 166);
      }
    }
    for (const Disc& d : prims) draw_disc(img, depth, rig, eye, d);
  }

  // Annotations: every flower whose center projects in-bounds in the left
  // image; visibility checked against the composited z-buffers.
  auto z_visible = [](const FloatPlane& depth, const PixelPoint& p, double z) {
    const int x = static_cast<int>(std::llround(p.u));
    const int y = static_cast<int>(std::llround(p.v));
    if (!depth.in_bounds(x, y)) return false;
    return std::abs(static_cast<double>(depth.at(x, y)) - z) <= 1e-3;
  };
  int next_id = 0;
  for (const PlacedFlower& pf : flowers) {
    const int lx = static_cast<int>(std::llround(pf.left.u));
    const int ly = static_cast<int>(std::llround(pf.left.v));
    if (lx < 0 || lx >= w || ly < 0 || ly >= h) continue;
    FlowerAnnotation ann;
    ann.id = next_id++;
    ann.center3 = pf.center;
    ann.left_px = pf.left;
    ann.right_px = pf.right;
    ann.depth_m = pf.center.z;
    ann.projected_radius_px = pf.radius_px;
    ann.visible_left = z_visible(sample.left_depth, pf.left, pf.center.z);
    ann.visible_right = z_visible(sample.right_depth, pf.right, pf.center.z);
    sample.annotations.push_back(ann);
  }
  return sample;
}

namespace {

void apply_brightness(RgbImage& img, int delta) {
  for (auto& v : img.data) {
    v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + delta, 0, 255));
  }
}

void apply_contrast(RgbImage& img, double gain) {
  std::uint64_t sum = 0;
  for (const auto v : img.data) sum += v;
  const double mean = static_cast<double>(sum) / static_cast<double>(img.data.size());
  for (auto& v : img.data) {
    const long nv = std::llround(mean + gain * (v - mean));
    v = static_cast<std::uint8_t>(std::clamp<long>(nv, 0, 255));
  }
}

void apply_noise(RgbImage& img, const std::vector<double>& field) {
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const long nv = std::llround(img.data[i] + field[i]);
    img.data[i] = static_cast<std::uint8_t>(std::clamp<long>(nv, 0, 255));
  }
}

struct Flare {
  double u = 0.0, v = 0.0, radius = 1.0, amplitude = 0.0;
};

void apply_flare(RgbImage& img, const Flare& fl) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double d = std::hypot(x - fl.u, y - fl.v);
      if (d >= fl.radius) continue;
      const double s = 1.0 - d / fl.radius;
      const int add = static_cast<int>(std::llround(fl.amplitude * s * s));
      for (int c = 0; c < 3; ++c) {
        auto& v = img.at(x, y, c);
        v = static_cast<std::uint8_t>(std::min(255, static_cast<int>(v) + add));
      }
    }
  }
}

struct RainSegment {
  double x = 0.0, y = 0.0, dx = 0.0, dy = 0.0, length = 0.0;
};

void apply_rain(RgbImage& img, const std::vector<RainSegment>& segments) {
  for (const RainSegment& seg : segments) {
    int px = -1, py = -1;
    for (double t = 0.0; t <= seg.length; t += 0.5) {
      const int x = static_cast<int>(std::llround(seg.x + seg.dx * t));
      const int y = static_cast<int>(std::llround(seg.y + seg.dy * t));
      if (x == px && y == py) continue;
      px = x;
      py = y;
      if (!img.in_bounds(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        auto& v = img.at(x, y, c);
        v = static_cast<std::uint8_t>(std::min(255, static_cast<int>(v) + 90));
      }
    }
  }
}

}  // namespace

Sample augment(const Sample& sample, const AugmentSpec& aug) {
  aug.validate();
  Sample out = sample;
  Rng rng(aug.seed);
  RgbImage* eyes[2] = {&out.left_image, &out.right_image};

  if (aug.brightness_delta.lo != 0 || aug.brightness_delta.hi != 0) {
    const int delta = static_cast<int>(
        rng.uniform_int(aug.brightness_delta.lo, aug.brightness_delta.hi));
    if (delta != 0) {
      for (auto* img : eyes) apply_brightness(*img, delta);
    }
  }
  if (aug.contrast_gain.lo != 1.0 || aug.contrast_gain.hi != 1.0) {
    const double gain = rng.uniform(aug.contrast_gain.lo, aug.contrast_gain.hi);
    if (gain != 1.0) {
      for (auto* img : eyes) apply_contrast(*img, gain);
    }
  }
  if (aug.noise_sigma > 0.0) {
    std::vector<double> field(out.left_image.data.size());
    for (auto& v : field) v = rng.normal() * aug.noise_sigma;
    for (auto* img : eyes) apply_noise(*img, field);
  }
  if (aug.sunflare) {
    Flare fl;
    fl.u = rng.uniform(0.0, out.left_image.width - 1.0);
    fl.v = rng.uniform(0.0, out.left_image.height - 1.0);
    fl.radius = rng.uniform(0.35, 0.7) *
                std::min(out.left_image.width, out.left_image.height);
    fl.amplitude = rng.uniform(40.0, 90.0);
    for (auto* img : eyes) apply_flare(*img, fl);
  }
  if (aug.rain) {
    const int n = static_cast<int>(rng.uniform_int(25, 55));
    std::vector<RainSegment> segments(static_cast<std::size_t>(n));
    for (auto& seg : segments) {
      seg.x = rng.uniform(0.0, out.left_image.width - 1.0);
      seg.y = rng.uniform(0.0, out.left_image.height - 1.0);
      const double ang = kPi / 2.0 + rng.uniform(-0.3, 0.3);
      seg.dx = std::cos(ang);
      seg.dy = std::sin(ang);
      seg.length = rng.uniform(8.0, 18.0);
    }
    for (auto* img : eyes) apply_rain(*img, segments);
  }
  return out;
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw std::out_of_range("unknown split tag: " + name);
}

DatasetManifest split_dataset(const DatasetManifest& manifest,
                              const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
    throw SplitError("split_dataset: ratios must be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw SplitError("split_dataset: ratios must sum to 1");
  }
  const std::size_t n = manifest.samples.size();
  if (n < 3) throw SplitError("split_dataset: need at least 3 samples");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);

  const auto n_val = static_cast<std::size_t>(ratios.val * static_cast<double>(n) + 1e-9);
  const auto n_test = static_cast<std::size_t>(ratios.test * static_cast<double>(n) + 1e-9);
  const std::size_t n_train = n - n_val - n_test;  // remainders go to train

  DatasetManifest out = manifest;
  out.ratios = ratios;
  for (std::size_t i = 0; i < n; ++i) {
    Split s = Split::test;
    if (i < n_train) {
      s = Split::train;
    } else if (i < n_train + n_val) {
      s = Split::val;
    }
    out.samples[perm[i]].split = s;
  }
  return out;
}

std::vector<long> depth_histogram(const Dataset& dataset, Split split,
                                  const std::vector<double>& edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw std::invalid_argument("depth_histogram: edges must be strictly increasing");
  }
  std::vector<long> counts(edges.size() - 1, 0);
  for (const SampleEntry& entry : dataset.manifest().samples) {
    if (entry.split != split) continue;
    for (const FlowerAnnotation& ann : dataset.load_annotations(entry.id)) {
      const auto it = std::upper_bound(edges.begin(), edges.end(), ann.depth_m);
      if (it == edges.begin() || it == edges.end()) continue;
      ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }
  return counts;
}

namespace {

std::string sample_basename(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", id);
  return buf;
}

json rig_to_json(const StereoRig& rig) {
  json j{{"focal_length_mm", rig.intrinsics.focal_length_mm},
         {"pixel_pitch_mm", rig.intrinsics.pixel_pitch_mm},
         {"cx", rig.intrinsics.cx},
         {"cy", rig.intrinsics.cy},
         {"width", rig.intrinsics.width},
         {"height", rig.intrinsics.height},
         {"baseline_m", rig.baseline_m}};
  if (rig.intrinsics.focal_px_override) {
    j["focal_px_override"] = *rig.intrinsics.focal_px_override;
  }
  return j;
}

StereoRig rig_from_json(const json& j) {
  StereoRig rig;
  rig.intrinsics.focal_length_mm = j.at("focal_length_mm").get<double>();
  rig.intrinsics.pixel_pitch_mm = j.at("pixel_pitch_mm").get<double>();
  if (j.contains("focal_px_override")) {
    rig.intrinsics.focal_px_override = j["focal_px_override"].get<double>();
  }
  rig.intrinsics.cx = j.at("cx").get<double>();
  rig.intrinsics.cy = j.at("cy").get<double>();
  rig.intrinsics.width = j.at("width").get<int>();
  rig.intrinsics.height = j.at("height").get<int>();
  rig.baseline_m = j.at("baseline_m").get<double>();
  rig.validate();
  return rig;
}

}  // namespace

SampleEntry make_sample_entry(int id, Split split) {
  SampleEntry e;
  e.id = id;
  e.split = split;
  const std::string base = "samples/" + sample_basename(id);
  e.left = base + "_left.ppm";
  e.right = base + "_right.ppm";
  e.left_depth = base + "_left_depth.pfm";
  e.right_depth = base + "_right_depth.pfm";
  e.annotations = base + "_annotations.jsonl";
  return e;
}

void write_manifest(const DatasetManifest& manifest, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["master_seed"] = manifest.master_seed;
  j["rig"] = rig_to_json(manifest.rig);
  j["ratios"] = {{"train", manifest.ratios.train},
                 {"val", manifest.ratios.val},
                 {"test", manifest.ratios.test}};
  json samples = json::array();
  for (const SampleEntry& e : manifest.samples) {
    samples.push_back({{"id", e.id},
                       {"split", to_string(e.split)},
                       {"left", e.left},
                       {"right", e.right},
                       {"left_depth", e.left_depth},
                       {"right_depth", e.right_depth},
                       {"annotations", e.annotations}});
  }
  j["samples"] = std::move(samples);
  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& dir) {
  const std::string path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path, static_cast<std::size_t>(std::max<std::streamoff>(in.tellg(), 0)),
                     e.what());
  }
  try {
    DatasetManifest m;
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.rig = rig_from_json(j.at("rig"));
    m.ratios.train = j.at("ratios").at("train").get<double>();
    m.ratios.val = j.at("ratios").at("val").get<double>();
    m.ratios.test = j.at("ratios").at("test").get<double>();
    for (const json& e : j.at("samples")) {
      SampleEntry entry;
      entry.id = e.at("id").get<int>();
      entry.split = split_from_string(e.at("split").get<std::string>());
      entry.left = e.at("left").get<std::string>();
      entry.right = e.at("right").get<std::string>();
      entry.left_depth = e.at("left_depth").get<std::string>();
      entry.right_depth = e.at("right_depth").get<std::string>();
      entry.annotations = e.at("annotations").get<std::string>();
      m.samples.push_back(std::move(entry));
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(path, 0, std::string("manifest: ") + e.what());
  }
}

void write_annotations_jsonl(const std::string& path,
                             const std::vector<FlowerAnnotation>& annotations) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const FlowerAnnotation& a : annotations) {
    const json j{{"id", a.id},
                 {"x_m", a.center3.x},
                 {"y_m", a.center3.y},
                 {"z_m", a.center3.z},
                 {"u_left", a.left_px.u},
                 {"v_left", a.left_px.v},
                 {"u_right", a.right_px.u},
                 {"v_right", a.right_px.v},
                 {"depth_m", a.depth_m},
                 {"radius_px", a.projected_radius_px},
                 {"visible_left", a.visible_left},
                 {"visible_right", a.visible_right}};
    out << j.dump() << "\n";
  }
}

std::vector<FlowerAnnotation> read_annotations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<FlowerAnnotation> annotations;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      try {
        const json j = json::parse(line);
        FlowerAnnotation a;
        a.id = j.at("id").get<int>();
        a.center3 = Point3{j.at("x_m").get<double>(), j.at("y_m").get<double>(),
                           j.at("z_m").get<double>()};
        a.left_px = PixelPoint{j.at("u_left").get<double>(), j.at("v_left").get<double>()};
        a.right_px =
            PixelPoint{j.at("u_right").get<double>(), j.at("v_right").get<double>()};
        a.depth_m = j.at("depth_m").get<double>();
        a.projected_radius_px = j.at("radius_px").get<double>();
        a.visible_left = j.at("visible_left").get<bool>();
        a.visible_right = j.at("visible_right").get<bool>();
        annotations.push_back(a);
      } catch (const json::exception& e) {
        throw ParseError(path, offset, e.what());
      }
    }
    offset += line.size() + 1;
  }
  return annotations;
}

void write_sample(const std::string& dir, const SampleEntry& entry,
                  const Sample& sample) {
  const fs::path base(dir);
  fs::create_directories(base / "samples");
  write_ppm((base / entry.left).string(), sample.left_image);
  write_ppm((base / entry.right).string(), sample.right_image);
  write_pfm((base / entry.left_depth).string(), sample.left_depth);
  write_pfm((base / entry.right_depth).string(), sample.right_depth);
  write_annotations_jsonl((base / entry.annotations).string(), sample.annotations);
}

void write_dataset(const DatasetManifest& manifest,
                   const std::vector<Sample>& samples, const std::string& dir) {
  if (manifest.samples.size() != samples.size()) {
    throw std::invalid_argument("write_dataset: manifest/sample count mismatch");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    write_sample(dir, manifest.samples[i], samples[i]);
  }
  write_manifest(manifest, dir);
}

Dataset Dataset::open(const std::string& dir) {
  Dataset d;
  d.dir_ = dir;
  d.manifest_ = read_manifest(dir);
  return d;
}

Dataset read_dataset(const std::string& dir) { return Dataset::open(dir); }

const SampleEntry& Dataset::entry(int id) const {
  for (const SampleEntry& e : manifest_.samples) {
    if (e.id == id) return e;
  }
  throw std::out_of_range("Dataset: unknown sample id " + std::to_string(id));
}

Sample Dataset::load_sample(int id) const {
  const SampleEntry& e = entry(id);
  const fs::path base(dir_);
  Sample s;
  s.left_image = read_ppm((base / e.left).string());
  s.right_image = read_ppm((base / e.right).string());
  s.left_depth = read_pfm((base / e.left_depth).string());
  s.right_depth = read_pfm((base / e.right_depth).string());
  s.annotations = read_annotations_jsonl((base / e.annotations).string());
  s.rig = manifest_.rig;
  s.scene_seed = derive_seed(manifest_.master_seed, static_cast<std::uint64_t>(id));
  return s;
}

std::vector<FlowerAnnotation> Dataset::load_annotations(int id) const {
  const SampleEntry& e = entry(id);
  return read_annotations_jsonl((fs::path(dir_) / e.annotations).string());
}

std::vector<Detection> oracle_detections(
    const std::vector<FlowerAnnotation>& annotations, double tau_m) {
  std::vector<Detection> detections;
  for (const FlowerAnnotation& a : annotations) {
    if (!a.visible_left) continue;
    detections.push_back(
        Detection{a.left_px, classify_by_depth(a.depth_m, tau_m), 1.0});
  }
  return detections;
}

std::vector<EncodedPoint> encoded_points(
    const std::vector<FlowerAnnotation>& annotations, Eye eye) {
  std::vector<EncodedPoint> points;
  for (const FlowerAnnotation& a : annotations) {
    const bool visible = eye == Eye::left ? a.visible_left : a.visible_right;
    if (!visible) continue;
    points.push_back(EncodedPoint{eye == Eye::left ? a.left_px : a.right_px,
                                  a.depth_m});
  }
  return points;
}

}  // namespace bloom3d
