#pragma once

// RGB frames with values in [0, 1], plus binary PPM/PGM I/O and a box overlay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/geometry.hpp"

namespace tacitdcf {

class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t width, std::size_t height, float fill = 0.0f)
      : width_(width), height_(height), data_(width * height * kChannels, fill) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::size_t y, std::size_t x, std::size_t c) noexcept { return data_[(y * width_ + x) * kChannels + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return data_[(y * width_ + x) * kChannels + c];
  }

  /// Value at an integer location with edge replication outside the frame.
  float clamped(long y, long x, std::size_t c) const noexcept {
    y = std::clamp<long>(y, 0, static_cast<long>(height_) - 1);
    x = std::clamp<long>(x, 0, static_cast<long>(width_) - 1);
    return at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
  }

  /// Bilinear sample at continuous pixel coordinates (pixel centers on integers).
  float bilinear(double y, double x, std::size_t c) const noexcept {
    const double fy = std::floor(y);
    const double fx = std::floor(x);
    const double ty = y - fy;
    const double tx = x - fx;
    const long y0 = static_cast<long>(fy);
    const long x0 = static_cast<long>(fx);
    const double v00 = clamped(y0, x0, c);
    const double v01 = clamped(y0, x0 + 1, c);
    const double v10 = clamped(y0 + 1, x0, c);
    const double v11 = clamped(y0 + 1, x0 + 1, c);
    return static_cast<float>((1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11));
  }

  std::vector<float>& storage() noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> data_;
};

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_int(std::istream& in, const std::string& path) {
  skip_pnm_space(in);
  std::size_t v = 0;
  if (!(in >> v)) throw FormatError("malformed PNM header in " + path, static_cast<std::uint64_t>(in.tellg()));
  return v;
}

}  // namespace detail

/// Reads binary PPM (P6) or PGM (P5), 8-bit or 16-bit.
inline Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path, std::nullopt);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '6' && magic[1] != '5')) {
    throw FormatError("not a binary PPM/PGM file: " + path, 0);
  }
  const bool color = magic[1] == '6';
  const std::size_t w = detail::read_pnm_int(in, path);
  const std::size_t h = detail::read_pnm_int(in, path);
  const std::size_t maxval = detail::read_pnm_int(in, path);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw FormatError("unsupported PNM dimensions in " + path, static_cast<std::uint64_t>(in.tellg()));
  }
  in.get();
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t src_channels = color ? 3 : 1;
  std::vector<unsigned char> raw(w * h * src_channels * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw FormatError("truncated pixel data in " + path, static_cast<std::uint64_t>(in.gcount()));
  }
  Image img(w, h);
  const float scale = 1.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < w * h; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t sc = color ? c : 0;
      const std::size_t idx = (i * src_channels + sc) * bytes_per;
      const unsigned v = bytes_per == 2 ? (unsigned(raw[idx]) << 8) | raw[idx + 1] : raw[idx];
      img.storage()[i * 3 + c] = static_cast<float>(v) * scale;
    }
  }
  return img;
}

inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path, std::nullopt);
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.storage().size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(img.storage()[i], 0.0f, 1.0f) * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

/// Draws a 1-pixel box outline in the given color (debug overlays).
inline void draw_box(Image& img, const BoundingBox& box, float r, float g, float b) {
  if (img.empty()) return;
  const long x0 = std::lround(box.x);
  const long y0 = std::lround(box.y);
  const long x1 = std::lround(box.x + box.width - 1);
  const long y1 = std::lround(box.y + box.height - 1);
  auto put = [&](long y, long x) {
    if (y < 0 || x < 0 || y >= static_cast<long>(img.height()) || x >= static_cast<long>(img.width())) return;
    img.at(y, x, 0) = r;
    img.at(y, x, 1) = g;
    img.at(y, x, 2) = b;
  };
  for (long x = x0; x <= x1; ++x) {
    put(y0, x);
    put(y1, x);
  }
  for (long y = y0; y <= y1; ++y) {
    put(y, x0);
    put(y, x1);
  }
}

}  // namespace tacitdcf
