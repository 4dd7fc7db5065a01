#pragma once

// Per-layer importance weights for the five objective families and the
// boosting-style refresh driven by each layer's share of the error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tacitdcf/error.hpp"

namespace tacitdcf {

/// Raw per-layer objective terms (all >= 0).
struct LayerTerms {
  double data = 0.0;      // ||S(f, x) - y||^2
  double mask = 0.0;      // sum_k ||w . f^k||^2
  double style = 0.0;     // candidate vs template style distance
  double temporal = 0.0;  // ||S(f, x_t) - S(f, x_{t-1})||^2
  double st_style = 0.0;  // frame vs previous frame style distance
};

struct ObjectiveBreakdown {
  std::vector<LayerTerms> layers;
  double total = 0.0;
};

enum class Family : std::uint8_t { kActivation, kSpatial, kCoincidental, kTemporal, kSpatiotemporal };
inline constexpr std::array<Family, 5> kFamilies = {Family::kActivation, Family::kSpatial, Family::kCoincidental,
                                                    Family::kTemporal, Family::kSpatiotemporal};

/// Five per-layer families a..e; each family sums to 1 over layers.
struct LayerWeights {
  std::vector<double> a, b, c, d, e;

  static LayerWeights uniform(std::size_t layers) {
    if (layers == 0) throw InvalidArgument("LayerWeights: need at least one layer");
    const std::vector<double> u(layers, 1.0 / static_cast<double>(layers));
    return {u, u, u, u, u};
  }

  std::size_t layer_count() const noexcept { return a.size(); }

  std::vector<double>& family(Family f) {
    switch (f) {
      case Family::kActivation: return a;
      case Family::kSpatial: return b;
      case Family::kCoincidental: return c;
      case Family::kTemporal: return d;
      case Family::kSpatiotemporal: return e;
    }
    return a;
  }
  const std::vector<double>& family(Family f) const { return const_cast<LayerWeights*>(this)->family(f); }

  bool operator==(const LayerWeights&) const = default;
};

/// Accumulated per-layer errors; same layout as LayerWeights.
struct CascadeErrors {
  std::vector<double> a, b, c, d, e;

  const std::vector<double>& family(Family f) const {
    switch (f) {
      case Family::kActivation: return a;
      case Family::kSpatial: return b;
      case Family::kCoincidental: return c;
      case Family::kTemporal: return d;
      case Family::kSpatiotemporal: return e;
    }
    return a;
  }
};

/// Each tier adds the weighted errors of the tiers before it to its own raw
/// term:
///   a~ = data
///   b~ = a a~ + mask
///   c~ = a a~ + b b~ + style
///   d~ = a a~ + b b~ + c c~ + temporal
///   e~ = a a~ + b b~ + c c~ + d d~ + st_style
inline CascadeErrors error_cascade(const ObjectiveBreakdown& breakdown, const LayerWeights& weights) {
  const std::size_t n = breakdown.layers.size();
  if (weights.layer_count() != n || weights.b.size() != n || weights.c.size() != n || weights.d.size() != n ||
      weights.e.size() != n) {
    throw InvalidArgument("error_cascade: weights and breakdown have different layer sets");
  }
  CascadeErrors out;
  for (auto* v : {&out.a, &out.b, &out.c, &out.d, &out.e}) v->resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const auto& t = breakdown.layers[l];
    for (double v : {t.data, t.mask, t.style, t.temporal, t.st_style}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("error_cascade: raw terms must be finite and >= 0");
    }
    const double wa = weights.a[l] * (out.a[l] = t.data);
    const double wb = weights.b[l] * (out.b[l] = wa + t.mask);
    const double wc = weights.c[l] * (out.c[l] = wa + wb + t.style);
    const double wd = weights.d[l] * (out.d[l] = wa + wb + wc + t.temporal);
    out.e[l] = wa + wb + wc + wd + t.st_style;
  }
  return out;
}

/// Divides by the sum in place. Returns false (and leaves values untouched)
/// when the sum is not positive.
inline bool normalize_family(std::span<double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  if (!(s > 0.0) || !std::isfinite(s)) return false;
  for (double& v : values) v /= s;
  return true;
}

struct WeightUpdate {
  LayerWeights weights;
  std::array<bool, 5> fell_back{};  // family fell back to uniform
  bool any_fallback() const noexcept {
    for (bool f : fell_back)
      if (f) return true;
    return false;
  }
};

/// z_l <- 1 - (eta + z~_l) / (eta + sum z~), clamped at 0, then normalized per
/// family. A family whose clamped sum is zero (a single layer, for instance)
/// falls back to uniform weights and is flagged.
inline WeightUpdate update_weights(const LayerWeights& weights, const CascadeErrors& errors, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("update_weights: eta must be positive");
  const std::size_t n = weights.layer_count();
  WeightUpdate out;
  out.weights = weights;
  for (std::size_t fi = 0; fi < kFamilies.size(); ++fi) {
    const Family f = kFamilies[fi];
    const auto& err = errors.family(f);
    if (err.size() != n) throw InvalidArgument("update_weights: error vector size mismatch");
    double total = 0.0;
    for (double z : err) {
      if (!std::isfinite(z) || z < 0.0) throw InvalidArgument("update_weights: errors must be finite and >= 0");
      total += z;
    }
    auto& w = out.weights.family(f);
    w.assign(n, 0.0);
    for (std::size_t l = 0; l < n; ++l) w[l] = std::max(0.0, 1.0 - (eta + err[l]) / (eta + total));
    if (!normalize_family(w)) {
      w.assign(n, 1.0 / static_cast<double>(n));
      out.fell_back[fi] = true;
    }
  }
  return out;
}

/// Fresh random weights, each family drawn uniformly then normalized. Uses
/// the raw engine output so results do not depend on the standard library's
/// distribution implementations.
inline LayerWeights random_weights(std::size_t layers, std::mt19937_64& rng) {
  LayerWeights w = LayerWeights::uniform(layers);
  for (Family f : kFamilies) {
    auto& v = w.family(f);
    for (double& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 + 1e-12;
    normalize_family(v);
  }
  return w;
}

}  // namespace tacitdcf
