#pragma once

// Multi-layer objective: weighted data terms plus the mask, style,
// temporal and spatiotemporal-style regularizers, reported per layer.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "tacitdcf/features.hpp"
#include "tacitdcf/fft.hpp"
#include "tacitdcf/filter.hpp"
#include "tacitdcf/gram.hpp"
#include "tacitdcf/weights.hpp"

namespace tacitdcf {

/// How raw feature tensors are conditioned before filtering.
struct FeaturePrep {
  bool normalize = false;      // scale each layer to unit RMS
  bool cosine_window = false;  // Hann taper before the DFT
  double style_fraction = 1.0;  // centered share of each axis used for Gram matrices
};

/// One layer after conditioning: the (unwindowed) features used for style
/// statistics and the spectrum used for correlation.
struct PreparedLayer {
  LayerSpec spec;
  FeatureTensor features;
  Spectrum spectrum;
};

using PreparedStack = std::vector<PreparedLayer>;

inline FeatureTensor normalize_rms(const FeatureTensor& t) {
  const double ss = sum_of_squares(t);
  if (!(ss > 0.0)) return t;
  FeatureTensor out = t;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(t.size()));
  for (double& v : out.storage()) v *= inv;
  return out;
}

inline PreparedLayer prepare_layer(const FeatureLayer& layer, const FeaturePrep& prep) {
  PreparedLayer out;
  out.spec = layer.spec;
  out.features = prep.normalize ? normalize_rms(layer.tensor) : layer.tensor;
  out.spectrum = dft2(prep.cosine_window ? apply_cosine_window(out.features) : out.features);
  return out;
}

inline PreparedStack prepare_stack(const FeatureStack& stack, const FeaturePrep& prep) {
  stack.validate();
  PreparedStack out;
  out.reserve(stack.size());
  for (const auto& layer : stack.layers) out.push_back(prepare_layer(layer, prep));
  return out;
}

/// Dimensions of the centered style window of a layer.
inline LayerSpec style_region(const LayerSpec& spec, double fraction) {
  LayerSpec r = spec;
  if (fraction < 1.0) {
    r.width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(spec.width * fraction)));
    r.height = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(spec.height * fraction)));
  }
  return r;
}

inline std::vector<GramMatrix> style_grams(const PreparedStack& stack, double fraction) {
  std::vector<GramMatrix> g;
  g.reserve(stack.size());
  for (const auto& l : stack) g.push_back(gram_of_center(l.features, fraction));
  return g;
}

/// Everything needed to evaluate the objective at one frame.
struct ObjectiveInputs {
  const FilterBank& bank;
  const PreparedStack& current;
  const PreparedStack* previous = nullptr;  // null on the first frame
  std::span<const GramMatrix> template_grams;
  const LayerWeights& weights;
  const RegularizationWeights& reg;
  std::span<const SpatialPenalty> penalties;
  double style_fraction = 1.0;
};

/// Evaluates every term for every layer and the weighted total
///   sum_l a_l data_l + l_msk sum_l b_l mask_l + l_sty sum_l c_l style_l
///   + l_tmp sum_l d_l temporal_l + l_sts sum_l e_l st_style_l.
/// Temporal and spatiotemporal terms are zero without a previous frame.
inline ObjectiveBreakdown objective_value(const ObjectiveInputs& in) {
  const std::size_t n = in.bank.layers.size();
  if (in.current.size() != n || in.template_grams.size() != n || in.penalties.size() != n ||
      in.weights.layer_count() != n || in.bank.labels.size() != n ||
      (in.previous != nullptr && in.previous->size() != n)) {
    throw InvalidArgument("objective_value: layer sets differ");
  }
  in.reg.validate();
  ObjectiveBreakdown out;
  out.layers.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const auto& state = in.bank.layers[l];
    const auto& cur = in.current[l];
    if (!(cur.spec == state.layer)) throw InvalidArgument("objective_value: layer '" + cur.spec.name + "' mismatch");
    LayerTerms& t = out.layers[l];
    const ResponseMap response = apply_filter(state, cur.spectrum);
    t.data = squared_difference(response, in.bank.labels[l]);
    t.mask = mask_penalty_value(state, in.penalties[l]);
    const LayerSpec region = style_region(cur.spec, in.style_fraction);
    const GramMatrix g_cur = gram_of_center(cur.features, in.style_fraction);
    t.style = style_distance(g_cur, in.template_grams[l], region);
    if (in.previous != nullptr) {
      const auto& prev = (*in.previous)[l];
      if (!(prev.spec == state.layer)) throw InvalidArgument("objective_value: previous layer mismatch");
      t.temporal = squared_difference(response, apply_filter(state, prev.spectrum));
      t.st_style = st_style_distance(g_cur, gram_of_center(prev.features, in.style_fraction), region);
    }
    out.total += in.weights.a[l] * t.data + in.reg.lambda_msk * in.weights.b[l] * t.mask +
                 in.reg.lambda_sty * in.weights.c[l] * t.style + in.reg.lambda_tmp * in.weights.d[l] * t.temporal +
                 in.reg.lambda_sts * in.weights.e[l] * t.st_style;
  }
  return out;
}

}  // namespace tacitdcf
