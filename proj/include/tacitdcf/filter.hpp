#pragma once

// Per-layer correlation filters kept as Fourier-domain numerator/denominator
// accumulators (exponential forgetting), the spatial penalty used by the
// mask regularizer, and the temporal response-change term.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/features.hpp"
#include "tacitdcf/fft.hpp"
#include "tacitdcf/geometry.hpp"
#include "tacitdcf/tensor.hpp"

namespace tacitdcf {

struct FilterLayerState {
  LayerSpec layer;
  Spectrum numerator;    // conj(label) . sample, per channel
  Spectrum denominator;  // sample energy summed over channels + lambda, one channel
  Spectrum filter;       // numerator / denominator

  /// Zero accumulators. The first update must use gamma = 1 (or any gamma > 0)
  /// before the filter is meaningful.
  static FilterLayerState empty(const LayerSpec& layer) {
    FilterLayerState s;
    s.layer = layer;
    s.numerator = Spectrum(layer.width, layer.height, layer.channels);
    s.denominator = Spectrum(layer.width, layer.height, 1);
    s.filter = Spectrum(layer.width, layer.height, layer.channels);
    return s;
  }
};

struct FilterBank {
  std::vector<FilterLayerState> layers;
  std::vector<FeatureTensor> labels;  // desired response per layer (spatial)
  std::vector<Spectrum> label_spectra;
  double learning_rate = 0.025;
  double lambda = 0.01;
};

struct RegularizationWeights {
  double lambda_msk = 0.1;
  double lambda_sty = 0.05;
  double lambda_tmp = 0.05;
  double lambda_sts = 0.02;

  void validate() const {
    for (double v : {lambda_msk, lambda_sty, lambda_tmp, lambda_sts}) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("regularization weights must be finite and >= 0");
    }
  }
};

/// Per-cell penalty on filter coefficients, lowest at the grid center.
class SpatialPenalty {
 public:
  SpatialPenalty() = default;
  SpatialPenalty(FeatureTensor values, double w_min, double w_max)
      : values_(std::move(values)), w_min_(w_min), w_max_(w_max) {}

  std::size_t width() const noexcept { return values_.width(); }
  std::size_t height() const noexcept { return values_.height(); }
  double w_min() const noexcept { return w_min_; }
  double w_max() const noexcept { return w_max_; }
  double operator()(std::size_t y, std::size_t x) const noexcept { return values_(y, x); }
  const FeatureTensor& values() const noexcept { return values_; }

 private:
  FeatureTensor values_;
  double w_min_ = 0.0;
  double w_max_ = 0.0;
};

/// w(p) = w_min + (w_max - w_min) * min(1, ((x - cx)/Tw)^2 + ((y - cy)/Th)^2)
/// with (cx, cy) = (W/2, H/2) and the target extent (Tw, Th) as the
/// saturation radius per axis.
inline SpatialPenalty make_spatial_penalty(std::size_t width, std::size_t height, Size2 target_size, double w_min,
                                           double w_max) {
  if (!(w_min > 0.0) || !(w_max >= w_min) || !std::isfinite(w_max)) {
    throw InvalidArgument("make_spatial_penalty: need 0 < w_min <= w_max");
  }
  if (!(target_size.width > 0.0) || !(target_size.height > 0.0)) {
    throw InvalidArgument("make_spatial_penalty: target size must be positive");
  }
  if (width == 0 || height == 0) throw InvalidArgument("make_spatial_penalty: empty grid");
  FeatureTensor v(width, height, 1);
  const double cx = static_cast<double>(width / 2);
  const double cy = static_cast<double>(height / 2);
  for (std::size_t y = 0; y < height; ++y) {
    const double ry = (static_cast<double>(y) - cy) / target_size.height;
    for (std::size_t x = 0; x < width; ++x) {
      const double rx = (static_cast<double>(x) - cx) / target_size.width;
      v(y, x) = w_min + (w_max - w_min) * std::min(1.0, rx * rx + ry * ry);
    }
  }
  return SpatialPenalty(std::move(v), w_min, w_max);
}

/// Exponential-forgetting update of numerator and shared denominator,
/// followed by the pointwise filter = numerator / denominator.
inline FilterLayerState closed_form_update(const FilterLayerState& state, const Spectrum& sample,
                                           const Spectrum& label, double gamma, double lambda) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("closed_form_update: gamma outside [0, 1]");
  if (!(lambda > 0.0)) throw InvalidArgument("closed_form_update: lambda must be positive");
  if (!sample.same_shape(state.numerator)) throw InvalidArgument("closed_form_update: sample shape mismatch");
  if (label.width() != sample.width() || label.height() != sample.height() || label.channels() != 1) {
    throw InvalidArgument("closed_form_update: label shape mismatch");
  }
  if (gamma == 0.0) return state;
  FilterLayerState out = state;
  const std::size_t n = sample.plane_size();
  const std::size_t c = sample.channels();
  const auto& x = sample.storage();
  const auto& y = label.storage();
  auto& num = out.numerator.storage();
  auto& den = out.denominator.storage();
  auto& f = out.filter.storage();
  for (std::size_t i = 0; i < n; ++i) {
    double energy = 0.0;
    const auto conj_y = std::conj(y[i]);
    for (std::size_t k = 0; k < c; ++k) {
      const auto xv = x[i * c + k];
      num[i * c + k] = (1.0 - gamma) * num[i * c + k] + gamma * conj_y * xv;
      energy += std::norm(xv);
    }
    den[i] = (1.0 - gamma) * den[i] + gamma * (energy + lambda);
    for (std::size_t k = 0; k < c; ++k) f[i * c + k] = num[i * c + k] / den[i];
  }
  return out;
}

inline ResponseMap apply_filter(const FilterLayerState& state, const Spectrum& sample) {
  return circular_correlate(state.filter, sample);
}

inline double squared_difference(const FeatureTensor& a, const FeatureTensor& b) {
  if (!a.same_shape(b)) throw InvalidArgument("squared_difference: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.storage()[i] - b.storage()[i];
    s += d * d;
  }
  return s;
}

/// ||S(f, x_t) - S(f, x_prev)||^2 evaluated in the spatial domain.
inline double temporal_penalty_value(const FilterLayerState& state, const Spectrum& current,
                                     const Spectrum& previous) {
  if (!current.same_shape(previous)) throw InvalidArgument("temporal_penalty_value: frame shapes differ");
  return squared_difference(apply_filter(state, current), apply_filter(state, previous));
}

/// sum_k ||w . f^k||^2 for the spatial-domain filter.
inline double mask_penalty_value(const FilterLayerState& state, const SpatialPenalty& penalty) {
  if (penalty.width() != state.filter.width() || penalty.height() != state.filter.height()) {
    throw InvalidArgument("mask_penalty_value: penalty grid does not match filter");
  }
  const FeatureTensor f = detail::inverse_real_part(state.filter);
  const std::size_t c = f.channels();
  double s = 0.0;
  for (std::size_t i = 0; i < f.plane_size(); ++i) {
    const double w = penalty.values().storage()[i];
    for (std::size_t k = 0; k < c; ++k) {
      const double v = w * f.storage()[i * c + k];
      s += v * v;
    }
  }
  return s;
}

}  // namespace tacitdcf
