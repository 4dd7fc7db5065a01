#pragma once

// Gram matrices of layer activations and the normalized style distances
// built on them.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/features.hpp"
#include "tacitdcf/tensor.hpp"

namespace tacitdcf {

/// Symmetric channels x channels matrix of summed co-activations.
class GramMatrix {
 public:
  GramMatrix() = default;
  explicit GramMatrix(std::size_t channels) : channels_(channels), data_(channels * channels, 0.0) {}

  std::size_t channels() const noexcept { return channels_; }
  double operator()(std::size_t k, std::size_t k2) const noexcept { return data_[k * channels_ + k2]; }
  double& operator()(std::size_t k, std::size_t k2) noexcept { return data_[k * channels_ + k2]; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const GramMatrix&) const = default;

 private:
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

/// G(k, k') = sum over all cells of q(y, x, k) * q(y, x, k'). The upper
/// triangle is accumulated and mirrored, so the result is exactly symmetric.
inline GramMatrix gram(const FeatureTensor& tensor) {
  const std::size_t c = tensor.channels();
  GramMatrix g(c);
  const auto d = tensor.data();
  for (std::size_t i = 0; i < tensor.plane_size(); ++i) {
    const double* q = d.data() + i * c;
    for (std::size_t k = 0; k < c; ++k) {
      const double qk = q[k];
      if (qk == 0.0) continue;
      for (std::size_t k2 = k; k2 < c; ++k2) g(k, k2) += qk * q[k2];
    }
  }
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t k2 = k + 1; k2 < c; ++k2) g(k2, k) = g(k, k2);
  return g;
}

/// Gram of the window covering `fraction` of each axis, centered at
/// (H/2 + dy, W/2 + dx) with periodic wrap.
inline GramMatrix gram_of_window(const FeatureTensor& tensor, double fraction, long dy, long dx) {
  const std::size_t c = tensor.channels();
  const long w = static_cast<long>(tensor.width());
  const long h = static_cast<long>(tensor.height());
  const long ww = fraction >= 1.0 ? w : std::max<long>(1, std::lround(static_cast<double>(w) * fraction));
  const long wh = fraction >= 1.0 ? h : std::max<long>(1, std::lround(static_cast<double>(h) * fraction));
  const long x0 = (w - ww) / 2 + dx;
  const long y0 = (h - wh) / 2 + dy;
  GramMatrix g(c);
  for (long y = 0; y < wh; ++y) {
    const long sy = ((y0 + y) % h + h) % h;
    for (long x = 0; x < ww; ++x) {
      const long sx = ((x0 + x) % w + w) % w;
      const double* q = &tensor(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
      for (std::size_t k = 0; k < c; ++k) {
        const double qk = q[k];
        if (qk == 0.0) continue;
        for (std::size_t k2 = k; k2 < c; ++k2) g(k, k2) += qk * q[k2];
      }
    }
  }
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t k2 = k + 1; k2 < c; ++k2) g(k2, k) = g(k, k2);
  return g;
}

/// Gram of the centered window covering `fraction` of each spatial axis.
inline GramMatrix gram_of_center(const FeatureTensor& tensor, double fraction) {
  if (fraction >= 1.0) return gram(tensor);
  return gram_of_window(tensor, fraction, 0, 0);
}

/// Element-wise mean of a non-empty set of same-sized Gram matrices.
inline GramMatrix mean_gram(std::span<const GramMatrix> grams) {
  if (grams.empty()) throw InvalidArgument("mean_gram: empty set");
  GramMatrix out(grams.front().channels());
  for (const auto& g : grams) {
    if (g.channels() != out.channels()) throw InvalidArgument("mean_gram: channel mismatch");
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += g.data()[i];
  }
  const double inv = 1.0 / static_cast<double>(grams.size());
  for (double& v : out.data()) v *= inv;
  return out;
}

/// ||gA - gB||_F^2 / (2 * H * W * C)^2 with H, W, C taken from `dims`.
inline double style_distance(const GramMatrix& a, const GramMatrix& b, const LayerSpec& dims) {
  if (a.channels() != b.channels()) throw InvalidArgument("style_distance: channel counts differ");
  if (dims.channels != a.channels()) throw InvalidArgument("style_distance: dims do not match Gram size");
  if (dims.width == 0 || dims.height == 0) throw InvalidArgument("style_distance: empty layer dims");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  const double norm = 2.0 * static_cast<double>(dims.height) * static_cast<double>(dims.width) *
                      static_cast<double>(dims.channels);
  return s / (norm * norm);
}

/// Style change between consecutive frames; same contract as style_distance.
inline double st_style_distance(const GramMatrix& current, const GramMatrix& previous, const LayerSpec& dims) {
  return style_distance(current, previous, dims);
}

}  // namespace tacitdcf
