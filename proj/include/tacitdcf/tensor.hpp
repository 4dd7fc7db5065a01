#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "tacitdcf/error.hpp"

namespace tacitdcf {

/// Dense H x W x C grid stored row-major in (y, x, k) order.
template <typename T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;
  Tensor3(std::size_t width, std::size_t height, std::size_t channels, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(width * height * channels, fill) {}
  Tensor3(std::size_t width, std::size_t height, std::size_t channels, std::vector<T> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (data_.size() != width * height * channels) {
      throw InvalidArgument("tensor data length does not match width*height*channels");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t plane_size() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t y, std::size_t x, std::size_t k = 0) noexcept {
    return data_[(y * width_ + x) * channels_ + k];
  }
  const T& operator()(std::size_t y, std::size_t x, std::size_t k = 0) const noexcept {
    return data_[(y * width_ + x) * channels_ + k];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Tensor3<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height() && channels_ == other.channels();
  }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<T> data_;
};

using FeatureTensor = Tensor3<double>;
using Spectrum = Tensor3<std::complex<double>>;
/// Single-channel correlation output.
using ResponseMap = Tensor3<double>;

inline bool all_finite(const FeatureTensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

inline double sum_of_squares(const FeatureTensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return s;
}

/// Copy of a single channel as a 1-channel tensor.
template <typename T>
Tensor3<T> channel_of(const Tensor3<T>& t, std::size_t k) {
  Tensor3<T> out(t.width(), t.height(), 1);
  for (std::size_t i = 0; i < t.plane_size(); ++i) out.storage()[i] = t.storage()[i * t.channels() + k];
  return out;
}

/// Circular shift: out(y, x) = in(y - dy, x - dx) with periodic wrap.
template <typename T>
Tensor3<T> circular_shift(const Tensor3<T>& t, long dy, long dx) {
  Tensor3<T> out(t.width(), t.height(), t.channels());
  const long h = static_cast<long>(t.height());
  const long w = static_cast<long>(t.width());
  if (h == 0 || w == 0) return out;
  for (long y = 0; y < h; ++y) {
    const long sy = ((y - dy) % h + h) % h;
    for (long x = 0; x < w; ++x) {
      const long sx = ((x - dx) % w + w) % w;
      for (std::size_t k = 0; k < t.channels(); ++k) out(y, x, k) = t(sy, sx, k);
    }
  }
  return out;
}

}  // namespace tacitdcf
