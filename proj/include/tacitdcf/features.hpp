#pragma once

// Per-layer feature stacks: patch sampling, the standardized raw-pixel layer
// ("layer 0"), a deterministic oriented filter-bank pyramid, and the Hann
// boundary taper.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/geometry.hpp"
#include "tacitdcf/image.hpp"
#include "tacitdcf/tensor.hpp"

namespace tacitdcf {

struct LayerSpec {
  std::uint32_t layer_id = 0;  // 0 = input pixels
  std::string name;
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::size_t stride = 1;  // patch pixels per feature cell

  bool operator==(const LayerSpec&) const = default;
};

/// Center of feature cell `cell` expressed in patch pixel coordinates.
inline double cell_to_patch(double cell, std::size_t stride) {
  return (cell + 0.5) * static_cast<double>(stride) - 0.5;
}

inline double patch_to_cell(double pixel, std::size_t stride) {
  return (pixel + 0.5) / static_cast<double>(stride) - 0.5;
}

struct FeatureLayer {
  LayerSpec spec;
  FeatureTensor tensor;

  bool operator==(const FeatureLayer&) const = default;
};

struct FeatureStack {
  std::size_t patch_size = 0;
  std::vector<FeatureLayer> layers;

  std::size_t size() const noexcept { return layers.size(); }
  const FeatureLayer& operator[](std::size_t i) const { return layers[i]; }
  FeatureLayer& operator[](std::size_t i) { return layers[i]; }

  /// Throws InvalidArgument unless ids ascend strictly and every tensor
  /// matches its spec.
  void validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (i > 0 && l.spec.layer_id <= layers[i - 1].spec.layer_id) {
        throw InvalidArgument("feature stack: layer ids must ascend strictly");
      }
      if (l.spec.stride < 1) throw InvalidArgument("feature stack: stride must be >= 1");
      if (l.tensor.width() != l.spec.width || l.tensor.height() != l.spec.height ||
          l.tensor.channels() != l.spec.channels) {
        throw InvalidArgument("feature stack: tensor does not match layer '" + l.spec.name + "'");
      }
    }
  }

  bool same_layout(const FeatureStack& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!(layers[i].spec == other.layers[i].spec)) return false;
    }
    return true;
  }

  bool operator==(const FeatureStack&) const = default;
};

/// Fixed-size RGB sample with values in [0, 1].
class Patch {
 public:
  Patch() = default;
  explicit Patch(FeatureTensor pixels) : pixels_(std::move(pixels)) {
    if (pixels_.channels() != 3) throw InvalidArgument("patch must have 3 color channels");
  }
  std::size_t width() const noexcept { return pixels_.width(); }
  std::size_t height() const noexcept { return pixels_.height(); }
  const FeatureTensor& pixels() const noexcept { return pixels_; }

 private:
  FeatureTensor pixels_;
};

/// Crops `box` grown by `padding` (context = (1 + padding) x box) and
/// resamples it bilinearly to out_width x out_height. Pixel centers map with
/// the half-pixel convention; outside the frame the edge is replicated.
inline Patch extract_patch(const Image& image, const BoundingBox& box, double padding, std::size_t out_width,
                           std::size_t out_height) {
  if (image.empty()) throw InvalidArgument("extract_patch: empty image");
  if (!box.valid()) throw InvalidArgument("extract_patch: box must have positive area");
  if (out_width == 0 || out_height == 0) throw InvalidArgument("extract_patch: empty output size");
  if (padding < 0.0) throw InvalidArgument("extract_patch: padding must be >= 0");
  const double crop_w = box.width * (1.0 + padding);
  const double crop_h = box.height * (1.0 + padding);
  const double x0 = box.center_x() - 0.5 * crop_w;
  const double y0 = box.center_y() - 0.5 * crop_h;
  const double sx = crop_w / static_cast<double>(out_width);
  const double sy = crop_h / static_cast<double>(out_height);
  FeatureTensor out(out_width, out_height, 3);
  for (std::size_t y = 0; y < out_height; ++y) {
    const double src_y = y0 + (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (std::size_t x = 0; x < out_width; ++x) {
      const double src_x = x0 + (static_cast<double>(x) + 0.5) * sx - 0.5;
      for (std::size_t c = 0; c < 3; ++c) out(y, x, c) = image.bilinear(src_y, src_x, c);
    }
  }
  return Patch(std::move(out));
}

/// Per-channel zero-mean, unit-variance copy of a tensor; flat channels map to 0.
inline FeatureTensor standardize_channels(const FeatureTensor& t) {
  FeatureTensor out(t.width(), t.height(), t.channels());
  const std::size_t n = t.plane_size();
  const std::size_t c = t.channels();
  for (std::size_t k = 0; k < c; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += t.storage()[i * c + k];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = t.storage()[i * c + k] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    if (var < 1e-12) continue;
    const double inv = 1.0 / std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) out.storage()[i * c + k] = (t.storage()[i * c + k] - mean) * inv;
  }
  return out;
}

/// Layer 0: the standardized patch, so correlating it behaves like NCC.
inline FeatureTensor raw_layer(const Patch& patch) { return standardize_channels(patch.pixels()); }

struct BankConfig {
  std::size_t levels = 2;
  std::size_t orientations = 4;  // x 2 phases (even, odd) per level
  bool include_input = true;     // prepend layer 0
};

/// One 3x3 oriented kernel, row-major [dy+1][dx+1].
struct OrientedKernel {
  double taps[3][3] = {};
};

/// Gabor-like 3x3 kernels. Channel 2*o is the even phase and 2*o+1 the odd
/// phase of orientation o*pi/orientations; orientation 0 varies along x and
/// therefore responds to vertical edges. Every kernel is zero-mean with unit
/// L1 norm.
inline std::vector<OrientedKernel> oriented_kernels(std::size_t orientations) {
  std::vector<OrientedKernel> out;
  for (std::size_t o = 0; o < orientations; ++o) {
    const double theta = std::numbers::pi * static_cast<double>(o) / static_cast<double>(orientations);
    double ct = std::cos(theta);
    double st = std::sin(theta);
    if (std::fabs(ct) < 1e-12) ct = 0.0;
    if (std::fabs(st) < 1e-12) st = 0.0;
    OrientedKernel even;
    OrientedKernel odd;
    double even_mean = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const double u = dx * ct + dy * st;
        const double g = std::exp(-0.5 * (dx * dx + dy * dy));
        even.taps[dy + 1][dx + 1] = std::cos(0.5 * std::numbers::pi * u) * g;
        odd.taps[dy + 1][dx + 1] = std::sin(0.5 * std::numbers::pi * u) * g;
        even_mean += even.taps[dy + 1][dx + 1];
      }
    }
    even_mean /= 9.0;
    double even_l1 = 0.0;
    double odd_l1 = 0.0;
    for (auto& row : even.taps) {
      for (double& v : row) {
        v -= even_mean;
        even_l1 += std::fabs(v);
      }
    }
    for (auto& row : odd.taps) {
      for (double& v : row) {
        // Exact zeros keep odd kernels exactly antisymmetric.
        if (std::fabs(v) < 1e-15) v = 0.0;
        odd_l1 += std::fabs(v);
      }
    }
    for (auto& row : even.taps) for (double& v : row) v /= even_l1;
    for (auto& row : odd.taps) for (double& v : row) v /= odd_l1;
    out.push_back(even);
    out.push_back(odd);
  }
  return out;
}

namespace detail {

/// Oriented filtering of a 1-channel map (replicated border), rectification,
/// then 2x2 average pooling.
inline FeatureTensor bank_level(const FeatureTensor& input, const std::vector<OrientedKernel>& kernels) {
  const std::size_t w = input.width();
  const std::size_t h = input.height();
  const std::size_t nk = kernels.size();
  FeatureTensor rect(w, h, nk);
  auto at = [&](long y, long x) {
    y = std::clamp<long>(y, 0, static_cast<long>(h) - 1);
    x = std::clamp<long>(x, 0, static_cast<long>(w) - 1);
    return input(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double nb[3][3];
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) nb[dy + 1][dx + 1] = at(static_cast<long>(y) + dy, static_cast<long>(x) + dx);
      for (std::size_t k = 0; k < nk; ++k) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) s += kernels[k].taps[i][j] * nb[i][j];
        rect(y, x, k) = s > 0.0 ? s : 0.0;
      }
    }
  }
  const std::size_t pw = w / 2;
  const std::size_t ph = h / 2;
  FeatureTensor pooled(pw, ph, nk);
  for (std::size_t y = 0; y < ph; ++y) {
    for (std::size_t x = 0; x < pw; ++x) {
      for (std::size_t k = 0; k < nk; ++k) {
        pooled(y, x, k) = 0.25 * (rect(2 * y, 2 * x, k) + rect(2 * y, 2 * x + 1, k) + rect(2 * y + 1, 2 * x, k) +
                                  rect(2 * y + 1, 2 * x + 1, k));
      }
    }
  }
  return pooled;
}

inline FeatureTensor channel_mean(const FeatureTensor& t) {
  FeatureTensor out(t.width(), t.height(), 1);
  const std::size_t c = t.channels();
  for (std::size_t i = 0; i < t.plane_size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += t.storage()[i * c + k];
    out.storage()[i] = s / static_cast<double>(c);
  }
  return out;
}

}  // namespace detail

/// Layer 0 (optional) followed by one pooled filter-bank level per
/// config.levels. Level n has stride 2^n; its input is the channel mean of
/// the previous level (the gray patch for level 1).
inline FeatureStack filterbank_stack(const Patch& patch, const BankConfig& config) {
  if (config.orientations == 0) throw InvalidArgument("filterbank_stack: need at least one orientation");
  if (config.levels == 0 && !config.include_input) throw InvalidArgument("filterbank_stack: empty layer set");
  const std::size_t min_side = std::size_t{1} << config.levels;
  if (patch.width() < min_side || patch.height() < min_side) {
    throw InvalidArgument("filterbank_stack: patch smaller than 2^levels");
  }
  FeatureStack stack;
  stack.patch_size = patch.width();
  if (config.include_input) {
    stack.layers.push_back({LayerSpec{0, "input", patch.width(), patch.height(), 3, 1}, raw_layer(patch)});
  }
  const auto kernels = oriented_kernels(config.orientations);
  FeatureTensor input = detail::channel_mean(patch.pixels());
  std::size_t stride = 1;
  for (std::size_t level = 1; level <= config.levels; ++level) {
    FeatureTensor out = detail::bank_level(input, kernels);
    stride *= 2;
    LayerSpec spec{static_cast<std::uint32_t>(level), "bank" + std::to_string(level), out.width(), out.height(),
                   out.channels(), stride};
    if (level < config.levels) input = detail::channel_mean(out);
    stack.layers.push_back({std::move(spec), std::move(out)});
  }
  return stack;
}

/// Separable Hann window sampled so the first and last rows/columns are 0.
inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
  }
  w.front() = 0.0;
  w.back() = 0.0;
  if (n % 2 == 1) w[n / 2] = 1.0;
  return w;
}

inline FeatureTensor apply_cosine_window(const FeatureTensor& t) {
  const auto wy = hann(t.height());
  const auto wx = hann(t.width());
  FeatureTensor out = t;
  for (std::size_t y = 0; y < t.height(); ++y)
    for (std::size_t x = 0; x < t.width(); ++x)
      for (std::size_t k = 0; k < t.channels(); ++k) out(y, x, k) *= wy[y] * wx[x];
  return out;
}

}  // namespace tacitdcf
