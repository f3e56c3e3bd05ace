#include "bloom3d/image_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace bloom3d {
namespace {

ParseError make_error(const std::string& path, std::size_t offset,
                      const std::string& what) {
  return ParseError(path, offset, what);
}

// Tracks the byte offset by hand so errors can point at it.
class Reader {
 public:
  Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw make_error(path_, 0, "cannot open file");
  }

  int get() {
    const int c = in_.get();
    if (c != EOF) ++offset_;
    return c;
  }

  void read_exact(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    if (got != n) {
      throw make_error(path_, offset_, std::string("truncated ") + what);
    }
  }

  // Next whitespace-delimited token, skipping '#' comments to end of line.
  std::string token(const char* what) {
    std::string t;
    int c = get();
    for (;;) {
      while (c == ' ' || c == '\t' || c == '\r' || c == '\n') c = get();
      if (c == '#') {
        while (c != '\n' && c != EOF) c = get();
        continue;
      }
      break;
    }
    while (c != EOF && c != ' ' && c != '\t' && c != '\r' && c != '\n') {
      t.push_back(static_cast<char>(c));
      c = get();
    }
    if (t.empty()) {
      throw make_error(path_, offset_, std::string("missing ") + what);
    }
    return t;
  }

  long token_long(const char* what) {
    const std::string t = token(what);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) {
      throw make_error(path_, offset_, std::string("bad integer for ") + what);
    }
    return v;
  }

  double token_double(const char* what) {
    const std::string t = token(what);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
      throw make_error(path_, offset_, std::string("bad number for ") + what);
    }
    return v;
  }

  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

void check_dims(const Reader& r, long w, long h) {
  if (w <= 0 || h <= 0 || w > 1 << 20 || h > 1 << 20) {
    throw make_error(r.path(), r.offset(), "implausible image dimensions");
  }
}

void byteswap_floats(std::vector<char>& raw) {
  for (std::size_t i = 0; i + 4 <= raw.size(); i += 4) {
    std::swap(raw[i], raw[i + 3]);
    std::swap(raw[i + 1], raw[i + 2]);
  }
}

// Reads PFM payload (after the header) into `channels` planes.
void read_pfm_body(Reader& r, int channels, int w, int h, bool file_le,
                   FloatPlane* out[3]) {
  static_assert(std::endian::native == std::endian::little ||
                std::endian::native == std::endian::big);
  const std::size_t n =
      static_cast<std::size_t>(w) * h * static_cast<std::size_t>(channels);
  std::vector<char> raw(n * 4);
  r.read_exact(raw.data(), raw.size(), "PFM pixel data");
  const bool host_le = std::endian::native == std::endian::little;
  if (file_le != host_le) byteswap_floats(raw);
  for (int c = 0; c < channels; ++c) *out[c] = FloatPlane(w, h);
  const float* f = reinterpret_cast<const float*>(raw.data());
  // PFM rows are stored bottom-up.
  for (int y = 0; y < h; ++y) {
    const int src_row = h - 1 - y;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        out[c]->at(x, y) =
            f[(static_cast<std::size_t>(src_row) * w + x) * channels + c];
      }
    }
  }
}

void write_pfm_impl(const std::string& path, int channels,
                    const FloatPlane* in[3]) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const int w = in[0]->width;
  const int h = in[0]->height;
  out << (channels == 1 ? "Pf" : "PF") << "\n" << w << " " << h << "\n-1.0\n";
  std::vector<char> raw(static_cast<std::size_t>(w) * h * channels * 4);
  float* f = reinterpret_cast<float*>(raw.data());
  for (int y = 0; y < h; ++y) {
    const int dst_row = h - 1 - y;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        f[(static_cast<std::size_t>(dst_row) * w + x) * channels + c] =
            in[c]->at(x, y);
      }
    }
  }
  if constexpr (std::endian::native == std::endian::big) byteswap_floats(raw);
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

}  // namespace

ParseError::ParseError(std::string path, std::size_t offset,
                       const std::string& what)
    : std::runtime_error(path + " @" + std::to_string(offset) + ": " + what),
      path_(std::move(path)),
      offset_(offset) {}

void write_ppm(const std::string& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
  if (!out) throw std::runtime_error("short write: " + path);
}

RgbImage read_ppm(const std::string& path) {
  Reader r(path);
  if (r.token("magic") != "P6") {
    throw make_error(path, r.offset(), "not a binary PPM (expected P6)");
  }
  const long w = r.token_long("width");
  const long h = r.token_long("height");
  check_dims(r, w, h);
  const long maxval = r.token_long("maxval");
  if (maxval != 255) {
    throw make_error(path, r.offset(), "unsupported maxval (expected 255)");
  }
  RgbImage img(static_cast<int>(w), static_cast<int>(h));
  r.read_exact(reinterpret_cast<char*>(img.data.data()), img.data.size(),
               "PPM pixel data");
  return img;
}

void write_pfm(const std::string& path, const FloatPlane& plane) {
  const FloatPlane* in[3] = {&plane, nullptr, nullptr};
  write_pfm_impl(path, 1, in);
}

FloatPlane read_pfm(const std::string& path) {
  Reader r(path);
  if (r.token("magic") != "Pf") {
    throw make_error(path, r.offset(), "not a single-channel PFM (expected Pf)");
  }
  const long w = r.token_long("width");
  const long h = r.token_long("height");
  check_dims(r, w, h);
  const double scale = r.token_double("scale");
  if (scale == 0.0) throw make_error(path, r.offset(), "zero PFM scale");
  FloatPlane plane;
  FloatPlane* out[3] = {&plane, nullptr, nullptr};
  read_pfm_body(r, 1, static_cast<int>(w), static_cast<int>(h), scale < 0.0,
                out);
  return plane;
}

void write_pfm_rgb(const std::string& path, const FloatPlane& c0,
                   const FloatPlane& c1, const FloatPlane& c2) {
  if (!c0.same_size(c1) || !c0.same_size(c2)) {
    throw std::invalid_argument("write_pfm_rgb: channel sizes differ");
  }
  const FloatPlane* in[3] = {&c0, &c1, &c2};
  write_pfm_impl(path, 3, in);
}

void read_pfm_rgb(const std::string& path, FloatPlane& c0, FloatPlane& c1,
                  FloatPlane& c2) {
  Reader r(path);
  if (r.token("magic") != "PF") {
    throw make_error(path, r.offset(), "not a three-channel PFM (expected PF)");
  }
  const long w = r.token_long("width");
  const long h = r.token_long("height");
  check_dims(r, w, h);
  const double scale = r.token_double("scale");
  if (scale == 0.0) throw make_error(path, r.offset(), "zero PFM scale");
  FloatPlane* out[3] = {&c0, &c1, &c2};
  read_pfm_body(r, 3, static_cast<int>(w), static_cast<int>(h), scale < 0.0,
                out);
}

}  // namespace bloom3d
