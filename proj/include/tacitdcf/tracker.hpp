#pragma once

// Multi-layer correlation-filter tracker.
//
// Each frame: sample the previous location at several scales, correlate every
// layer with its filter, fuse the per-layer responses with the activation
// weights, subtract the style / temporal / spatiotemporal-style penalties of
// each scale candidate, and take the best (position, scale). The filters,
// template history and (in adaptive mode) the layer weights are then updated
// from a sample re-extracted at the new box.

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/features.hpp"
#include "tacitdcf/fft.hpp"
#include "tacitdcf/filter.hpp"
#include "tacitdcf/geometry.hpp"
#include "tacitdcf/gram.hpp"
#include "tacitdcf/image.hpp"
#include "tacitdcf/objective.hpp"
#include "tacitdcf/parallel.hpp"
#include "tacitdcf/solver.hpp"
#include "tacitdcf/weights.hpp"

namespace tacitdcf {

enum class WeightMode { kUniform, kRandom, kAdaptive };
enum class SolverMode { kClosedForm, kGaussSeidel };

struct TrackerConfig {
  BankConfig bank;                  // layer set: optional layer 0 + filter-bank levels
  double learning_rate = 0.025;     // gamma
  double lambda = 0.01;             // ridge term of the closed-form denominator
  RegularizationWeights reg;        // lambda_msk, lambda_sty, lambda_tmp, lambda_sts
  double eta = 1e-4;
  std::size_t scale_count = 5;
  double scale_step = 1.02;
  double sigma_ratio = 1.0 / 16.0;  // label sigma relative to the target size in the patch
  std::size_t patch_size = 128;
  double padding = 1.0;
  WeightMode weight_mode = WeightMode::kAdaptive;
  SolverMode solver = SolverMode::kClosedForm;
  std::size_t history_length = 10;
  bool cosine_window = true;
  bool normalize_features = true;
  double penalty_min = 0.1;
  double penalty_max = 10.0;
  std::size_t penalty_coeffs = 21;
  std::size_t solver_sweeps = 4;          // per frame, warm-started
  std::size_t solver_initial_sweeps = 50;  // first frame
  double solver_tol = 1e-5;
  std::uint64_t seed = 0;
  std::size_t workers = 1;  // concurrent scale candidates

  void validate() const {
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) throw InvalidArgument("config: gamma must be in [0, 1]");
    if (!(lambda > 0.0)) throw InvalidArgument("config: lambda must be positive");
    reg.validate();
    if (!(eta > 0.0)) throw InvalidArgument("config: eta must be positive");
    if (scale_count == 0 || scale_count % 2 == 0) throw InvalidArgument("config: scale_count must be odd");
    if (!(scale_step > 1.0)) throw InvalidArgument("config: scale_step must exceed 1");
    if (!(sigma_ratio > 0.0)) throw InvalidArgument("config: sigma_ratio must be positive");
    if (!(padding >= 0.0)) throw InvalidArgument("config: padding must be >= 0");
    if (patch_size < 8) throw InvalidArgument("config: patch_size too small");
    if (history_length == 0) throw InvalidArgument("config: history_length must be >= 1");
    if (!(penalty_min > 0.0 && penalty_max >= penalty_min)) throw InvalidArgument("config: bad penalty range");
    if (bank.levels == 0 && !bank.include_input) throw InvalidArgument("config: empty layer set");
  }

  RegularizationWeights& lambdas() { return reg; }
};

using FeatureExtractor = std::function<FeatureStack(const Patch&)>;

struct HistoryEntry {
  FeatureStack stack;
  std::vector<GramMatrix> grams;
};

struct TrackerState {
  FilterBank bank;
  LayerWeights weights;
  BoundingBox box;
  double scale = 1.0;  // relative to the initial target size
  Size2 base_size;
  std::deque<HistoryEntry> history;
  std::vector<GramMatrix> initial_grams;
  std::vector<GramMatrix> template_grams;  // mean of initial + history
  PreparedStack last_sample;
  std::vector<GramMatrix> last_grams;
  std::vector<ResponseMap> last_responses;  // S(f_t, x_t)
  std::vector<SpatialPenalty> penalties;
  std::vector<PenaltyKernel> kernels;       // gauss-seidel mode only
  std::vector<NormalEquations> normal_equations;
  std::size_t frame_index = 0;
  std::size_t frame_width = 0;
  std::size_t frame_height = 0;
  std::mt19937_64 rng;
};

/// Scores of one scale candidate.
struct CandidateScore {
  double scale_factor = 1.0;
  double peak = 0.0;  // fused response maximum
  double dx = 0.0;    // displacement of the peak, patch pixels
  double dy = 0.0;
  std::vector<double> style;     // per layer
  std::vector<double> temporal;  // per layer
  std::vector<double> st_style;  // per layer
  double style_penalty = 0.0;     // weighted contributions to `penalty`
  double temporal_penalty = 0.0;
  double st_style_penalty = 0.0;
  double penalty = 0.0;
  double score = 0.0;  // peak - penalty
  ResponseMap fused;
};

struct StepDiagnostics {
  std::size_t frame_index = 0;
  std::size_t chosen_scale = 0;
  std::vector<CandidateScore> candidates;
  ObjectiveBreakdown breakdown;
  LayerWeights weights;  // after the update
  bool weight_fallback = false;
  std::vector<SolverReport> solver_reports;
};

struct StepResult {
  BoundingBox box;
  StepDiagnostics diagnostics;
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig config, FeatureExtractor extractor = {})
      : config_(std::move(config)), extractor_(std::move(extractor)) {
    config_.validate();
    if (!extractor_) {
      const BankConfig bank = config_.bank;
      extractor_ = [bank](const Patch& p) { return filterbank_stack(p, bank); };
    }
    prep_.normalize = config_.normalize_features;
    prep_.cosine_window = config_.cosine_window;
    prep_.style_fraction = 1.0 / (1.0 + config_.padding);
  }

  const TrackerConfig& config() const noexcept { return config_; }
  const TrackerState& state() const noexcept { return state_; }
  bool initialized() const noexcept { return initialized_; }
  const FeaturePrep& prep() const noexcept { return prep_; }

  void init(const Image& frame, const BoundingBox& box) {
    if (frame.empty()) throw InvalidArgument("init: empty frame");
    if (!box.valid()) throw InvalidArgument("init: degenerate box");
    if (box.center_x() < 0.0 || box.center_y() < 0.0 || box.center_x() >= static_cast<double>(frame.width()) ||
        box.center_y() >= static_cast<double>(frame.height())) {
      throw InvalidArgument("init: box center outside the frame");
    }
    state_ = TrackerState{};
    state_.rng.seed(config_.seed);
    state_.frame_width = frame.width();
    state_.frame_height = frame.height();
    state_.box = box;
    state_.base_size = box.size();
    state_.scale = 1.0;

    const FeatureStack stack = sample_stack(frame, box);
    const PreparedStack sample = prepare_stack(stack, prep_);
    const std::size_t n = sample.size();
    if (n == 0) throw InvalidArgument("init: feature extractor produced no layers");

    const double target_in_patch = static_cast<double>(config_.patch_size) / (1.0 + config_.padding);
    auto& bank = state_.bank;
    bank.learning_rate = config_.learning_rate;
    bank.lambda = config_.lambda;
    for (const auto& layer : sample) {
      const double stride = static_cast<double>(layer.spec.stride);
      const double sigma = std::max(0.5, config_.sigma_ratio * target_in_patch / stride);
      FeatureTensor label = gaussian_label(layer.spec.width, layer.spec.height, sigma, {0.0, 0.0});
      bank.label_spectra.push_back(dft2(label));
      bank.labels.push_back(std::move(label));
      const double target_cells = target_in_patch / stride;
      state_.penalties.push_back(make_spatial_penalty(layer.spec.width, layer.spec.height,
                                                      {target_cells, target_cells}, config_.penalty_min,
                                                      config_.penalty_max));
      bank.layers.push_back(FilterLayerState::empty(layer.spec));
    }
    state_.weights = LayerWeights::uniform(n);
    if (config_.weight_mode == WeightMode::kRandom) state_.weights = random_weights(n, state_.rng);

    if (config_.solver == SolverMode::kGaussSeidel) {
      for (std::size_t l = 0; l < n; ++l) {
        state_.kernels.push_back(penalty_kernel(state_.penalties[l], config_.penalty_coeffs));
        const auto& s = sample[l].spectrum;
        state_.normal_equations.emplace_back(s.width(), s.height(), s.channels());
      }
    }
    train(sample, 1.0, config_.solver_initial_sweeps);

    const auto grams = style_grams(sample, prep_.style_fraction);
    state_.initial_grams = grams;
    state_.history.push_back({stack, grams});
    refresh_templates();
    remember(sample, grams);
    state_.frame_index = 0;
    initialized_ = true;
  }

  /// Scores one candidate stack sampled at `scale_factor` times the current
  /// scale. `previous` defaults to the last training sample.
  CandidateScore score_candidate(const FeatureStack& stack, const PreparedStack* previous,
                                 double scale_factor) const {
    require_initialized();
    const PreparedStack cand = prepare_stack(stack, prep_);
    if (previous == nullptr) return score_prepared(cand, scale_factor, state_.last_responses, state_.last_grams);
    if (previous->size() != cand.size()) throw InvalidArgument("score_candidate: previous stack layer mismatch");
    std::vector<ResponseMap> prev_resp;
    for (std::size_t l = 0; l < previous->size(); ++l) {
      prev_resp.push_back(apply_filter(state_.bank.layers[l], (*previous)[l].spectrum));
    }
    return score_prepared(cand, scale_factor, prev_resp, style_grams(*previous, prep_.style_fraction));
  }

  StepResult step(const Image& frame) {
    require_initialized();
    if (frame.width() != state_.frame_width || frame.height() != state_.frame_height) {
      throw InvalidArgument("step: frame size differs from the initial frame");
    }
    const std::size_t ns = config_.scale_count;
    const long mid = static_cast<long>(ns / 2);
    std::vector<CandidateScore> cands(ns);
    parallel_for(ns, config_.workers, [&](std::size_t i) {
      const double factor = std::pow(config_.scale_step, static_cast<double>(static_cast<long>(i) - mid));
      const BoundingBox cbox = BoundingBox::from_center(state_.box.center_x(), state_.box.center_y(),
                                                        state_.base_size.width * state_.scale * factor,
                                                        state_.base_size.height * state_.scale * factor);
      const PreparedStack cand = prepare_stack(sample_stack(frame, cbox), prep_);
      cands[i] = score_prepared(cand, factor, state_.last_responses, state_.last_grams);
    });
    // Visit the unit scale first so exact ties keep the current scale.
    std::size_t best = static_cast<std::size_t>(mid);
    for (long off = 1; off <= mid; ++off) {
      for (long idx : {mid - off, mid + off}) {
        if (cands[static_cast<std::size_t>(idx)].score > cands[best].score) best = static_cast<std::size_t>(idx);
      }
    }
    const CandidateScore& win = cands[best];
    const double new_scale = std::clamp(state_.scale * win.scale_factor, 0.05, 20.0);
    const double window_w = state_.base_size.width * state_.scale * win.scale_factor * (1.0 + config_.padding);
    const double window_h = state_.base_size.height * state_.scale * win.scale_factor * (1.0 + config_.padding);
    const double px = static_cast<double>(config_.patch_size);
    double cx = state_.box.center_x() + win.dx * window_w / px;
    double cy = state_.box.center_y() + win.dy * window_h / px;
    cx = std::clamp(cx, 0.0, static_cast<double>(frame.width() - 1));
    cy = std::clamp(cy, 0.0, static_cast<double>(frame.height() - 1));
    state_.scale = new_scale;
    state_.box = BoundingBox::from_center(cx, cy, state_.base_size.width * new_scale,
                                          state_.base_size.height * new_scale);
    ++state_.frame_index;

    StepResult result;
    result.box = state_.box;
    result.diagnostics.frame_index = state_.frame_index;
    result.diagnostics.chosen_scale = best;
    update(frame, result.diagnostics);
    result.diagnostics.candidates = std::move(cands);
    return result;
  }

 private:
  void require_initialized() const {
    if (!initialized_) throw InvalidArgument("tracker used before init");
  }

  FeatureStack sample_stack(const Image& frame, const BoundingBox& box) const {
    const Patch patch = extract_patch(frame, box, config_.padding, config_.patch_size, config_.patch_size);
    FeatureStack stack = extractor_(patch);
    stack.validate();
    return stack;
  }

  CandidateScore score_prepared(const PreparedStack& cand, double factor, const std::vector<ResponseMap>& prev_resp,
                                const std::vector<GramMatrix>& prev_grams) const {
    const std::size_t n = state_.bank.layers.size();
    if (cand.size() != n) throw InvalidArgument("score_candidate: layer set mismatch");
    for (std::size_t l = 0; l < n; ++l) {
      if (!(cand[l].spec == state_.bank.layers[l].layer)) {
        throw InvalidArgument("score_candidate: layer '" + cand[l].spec.name + "' does not match the filters");
      }
    }
    CandidateScore out;
    out.scale_factor = factor;
    std::vector<ResponseMap> responses;
    responses.reserve(n);
    for (std::size_t l = 0; l < n; ++l) responses.push_back(apply_filter(state_.bank.layers[l], cand[l].spectrum));

    // Fuse on the finest layer's displacement grid.
    const auto& fine = cand.front().spec;
    const std::size_t fw = fine.width;
    const std::size_t fh = fine.height;
    out.fused = ResponseMap(fw, fh, 1);
    for (std::size_t l = 0; l < n; ++l) {
      const double a = state_.weights.a[l];
      if (a == 0.0) continue;
      const double ratio = static_cast<double>(cand[l].spec.stride) / static_cast<double>(fine.stride);
      const auto& r = responses[l];
      if (ratio == 1.0 && r.width() == fw && r.height() == fh) {
        for (std::size_t i = 0; i < out.fused.size(); ++i) out.fused.storage()[i] += a * r.storage()[i];
        continue;
      }
      for (std::size_t y = 0; y < fh; ++y) {
        const double ly = signed_index(y, fh) / ratio;
        for (std::size_t x = 0; x < fw; ++x) {
          const double lx = signed_index(x, fw) / ratio;
          out.fused(y, x) += a * periodic_bilinear(r, ly, lx);
        }
      }
    }
    std::size_t py = 0;
    std::size_t px = 0;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < fh; ++y) {
      for (std::size_t x = 0; x < fw; ++x) {
        if (out.fused(y, x) > peak) {
          peak = out.fused(y, x);
          py = y;
          px = x;
        }
      }
    }
    out.peak = peak;
    const double sub_y = parabolic_offset(out.fused(wrap_index(py, -1, fh), px), peak, out.fused(wrap_index(py, 1, fh), px));
    const double sub_x = parabolic_offset(out.fused(py, wrap_index(px, -1, fw)), peak, out.fused(py, wrap_index(px, 1, fw)));
    const double fine_dy = signed_index(py, fh) + sub_y;
    const double fine_dx = signed_index(px, fw) + sub_x;
    out.dy = fine_dy * static_cast<double>(fine.stride);
    out.dx = fine_dx * static_cast<double>(fine.stride);

    // Penalties evaluated at the peak-centered window of each layer.
    out.style.assign(n, 0.0);
    out.temporal.assign(n, 0.0);
    out.st_style.assign(n, 0.0);
    const auto& reg = config_.reg;
    for (std::size_t l = 0; l < n; ++l) {
      const double ratio = static_cast<double>(cand[l].spec.stride) / static_cast<double>(fine.stride);
      const long sy = std::lround(signed_index(py, fh) / ratio);
      const long sx = std::lround(signed_index(px, fw) / ratio);
      const bool need_gram = reg.lambda_sty > 0.0 || reg.lambda_sts > 0.0;
      if (need_gram) {
        const GramMatrix g = gram_of_window(cand[l].features, prep_.style_fraction, sy, sx);
        const LayerSpec region = style_region(cand[l].spec, prep_.style_fraction);
        out.style[l] = style_distance(g, state_.template_grams[l], region);
        if (l < prev_grams.size()) out.st_style[l] = st_style_distance(g, prev_grams[l], region);
      }
      if (reg.lambda_tmp > 0.0 && l < prev_resp.size()) {
        out.temporal[l] = shifted_squared_difference(responses[l], prev_resp[l], sy, sx);
      }
      out.style_penalty += reg.lambda_sty * state_.weights.c[l] * out.style[l];
      out.temporal_penalty += reg.lambda_tmp * state_.weights.d[l] * out.temporal[l];
      out.st_style_penalty += reg.lambda_sts * state_.weights.e[l] * out.st_style[l];
    }
    out.penalty = out.style_penalty + out.temporal_penalty + out.st_style_penalty;
    out.score = out.peak - out.penalty;
    return out;
  }

  void update(const Image& frame, StepDiagnostics& diag) {
    const FeatureStack stack = sample_stack(frame, state_.box);
    const PreparedStack sample = prepare_stack(stack, prep_);
    const ObjectiveInputs inputs{state_.bank,       sample,        &state_.last_sample, state_.template_grams,
                                 state_.weights,    config_.reg,   state_.penalties,    prep_.style_fraction};
    diag.breakdown = objective_value(inputs);
    diag.solver_reports = train(sample, config_.learning_rate, config_.solver_sweeps);

    switch (config_.weight_mode) {
      case WeightMode::kUniform:
        break;
      case WeightMode::kRandom:
        state_.weights = random_weights(state_.weights.layer_count(), state_.rng);
        break;
      case WeightMode::kAdaptive: {
        const CascadeErrors errors = error_cascade(diag.breakdown, state_.weights);
        WeightUpdate upd = update_weights(state_.weights, errors, config_.eta);
        diag.weight_fallback = upd.any_fallback();
        state_.weights = std::move(upd.weights);
        break;
      }
    }
    diag.weights = state_.weights;

    auto grams = style_grams(sample, prep_.style_fraction);
    state_.history.push_back({stack, grams});
    while (state_.history.size() > config_.history_length) state_.history.pop_front();
    refresh_templates();
    remember(sample, std::move(grams));
  }

  /// Updates every layer's filter with `sample` at rate gamma.
  std::vector<SolverReport> train(const PreparedStack& sample, double gamma, std::size_t sweeps) {
    std::vector<SolverReport> reports;
    auto& bank = state_.bank;
    for (std::size_t l = 0; l < sample.size(); ++l) {
      const Spectrum& x = sample[l].spectrum;
      const Spectrum& y = bank.label_spectra[l];
      bank.layers[l] = closed_form_update(bank.layers[l], x, y, gamma, config_.lambda);
      if (config_.solver != SolverMode::kGaussSeidel) continue;
      auto& ne = state_.normal_equations[l];
      ne.scale(1.0 - gamma);
      ne.add_sample(x, y, gamma);
      const double a = std::max(state_.weights.a[l], 1e-3);
      const double lambda_eff = config_.reg.lambda_msk * state_.weights.b[l] / a;
      Spectrum solution = bank.layers[l].filter;
      if (gamma < 1.0 && !state_.last_sample.empty()) solution = gs_filters_[l];
      reports.push_back(gauss_seidel(ne, state_.kernels[l], lambda_eff, solution,
                                     SolverOptions{sweeps, config_.solver_tol, config_.lambda}));
      detail::make_hermitian(solution);
      if (gs_filters_.size() <= l) gs_filters_.resize(l + 1);
      gs_filters_[l] = solution;
      bank.layers[l].filter = std::move(solution);
    }
    return reports;
  }

  void refresh_templates() {
    std::vector<std::vector<GramMatrix>> per_layer(state_.initial_grams.size());
    for (std::size_t l = 0; l < per_layer.size(); ++l) {
      per_layer[l].push_back(state_.initial_grams[l]);
      for (const auto& h : state_.history) per_layer[l].push_back(h.grams[l]);
    }
    state_.template_grams.clear();
    for (const auto& g : per_layer) state_.template_grams.push_back(mean_gram(g));
  }

  void remember(const PreparedStack& sample, std::vector<GramMatrix> grams) {
    state_.last_sample = sample;
    state_.last_grams = std::move(grams);
    state_.last_responses.clear();
    for (std::size_t l = 0; l < sample.size(); ++l) {
      state_.last_responses.push_back(apply_filter(state_.bank.layers[l], sample[l].spectrum));
    }
  }

  static double signed_index(std::size_t i, std::size_t n) {
    const long v = static_cast<long>(i);
    const long m = static_cast<long>(n);
    return static_cast<double>(v >= (m + 1) / 2 ? v - m : v);
  }

  static std::size_t wrap_index(std::size_t i, long delta, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((static_cast<long>(i) + delta) % m + m) % m);
  }

  static double periodic_bilinear(const ResponseMap& r, double y, double x) {
    const double fy = std::floor(y);
    const double fx = std::floor(x);
    const double ty = y - fy;
    const double tx = x - fx;
    const long h = static_cast<long>(r.height());
    const long w = static_cast<long>(r.width());
    auto at = [&](long yy, long xx) {
      yy = (yy % h + h) % h;
      xx = (xx % w + w) % w;
      return r(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
    };
    const long y0 = static_cast<long>(fy);
    const long x0 = static_cast<long>(fx);
    return (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x0 + 1)) +
           ty * ((1 - tx) * at(y0 + 1, x0) + tx * at(y0 + 1, x0 + 1));
  }

  static double parabolic_offset(double left, double center, double right) {
    const double denom = left - 2.0 * center + right;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
  }

  /// sum_p (r(p + s) - prev(p))^2 with periodic wrap.
  static double shifted_squared_difference(const ResponseMap& r, const ResponseMap& prev, long sy, long sx) {
    const long h = static_cast<long>(r.height());
    const long w = static_cast<long>(r.width());
    double s = 0.0;
    for (long y = 0; y < h; ++y) {
      const long yy = ((y + sy) % h + h) % h;
      for (long x = 0; x < w; ++x) {
        const long xx = ((x + sx) % w + w) % w;
        const double d = r(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) -
                         prev(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        s += d * d;
      }
    }
    return s;
  }

  TrackerConfig config_;
  FeatureExtractor extractor_;
  FeaturePrep prep_;
  TrackerState state_;
  std::vector<Spectrum> gs_filters_;
  bool initialized_ = false;
};

}  // namespace tacitdcf
