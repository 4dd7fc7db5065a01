#pragma once

// Runs a tracker over a sequence, scores it, and sweeps the regularizer /
// weight-mode grid. JSON output is deterministic: no timings, fixed key
// order, fixed number formatting.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tacitdcf/eval/config.hpp"
#include "tacitdcf/eval/metrics.hpp"
#include "tacitdcf/eval/sequence.hpp"
#include "tacitdcf/parallel.hpp"
#include "tacitdcf/tracker.hpp"

namespace tacitdcf::eval {

struct RunResult {
  std::vector<BoundingBox> boxes;
  MetricReport report;
  std::vector<std::size_t> chosen_scale;      // per tracked frame (frame 0 excluded)
  std::vector<std::size_t> peak_only_scale;   // what the raw fused peaks alone would pick
  std::size_t penalty_decided_frames = 0;     // frames where the two differ
  std::size_t style_decided_frames = 0;       // frames the style term alone flipped
  std::size_t weight_fallbacks = 0;
};

/// Argmax of `value` over candidates, scanning outward from the unit scale
/// the same way the tracker breaks ties.
template <typename Fn>
std::size_t best_candidate(const std::vector<CandidateScore>& c, Fn value) {
  const long mid = static_cast<long>(c.size() / 2);
  std::size_t best = static_cast<std::size_t>(mid);
  for (long off = 1; off <= mid; ++off)
    for (long idx : {mid - off, mid + off})
      if (value(c[static_cast<std::size_t>(idx)]) > value(c[best])) best = static_cast<std::size_t>(idx);
  return best;
}

inline std::size_t best_by_peak(const std::vector<CandidateScore>& c) {
  return best_candidate(c, [](const CandidateScore& s) { return s.peak; });
}

/// Choice the tracker would have made with the style term removed.
inline std::size_t best_without_style(const std::vector<CandidateScore>& c) {
  return best_candidate(c, [](const CandidateScore& s) { return s.score + s.style_penalty; });
}

using FrameCallback = std::function<void(std::size_t, const Image&, const BoundingBox&)>;

inline RunResult run_sequence(const Sequence& seq, const TrackerConfig& config, FeatureExtractor extractor = {},
                              const FrameCallback& on_frame = {}) {
  seq.validate();
  if (seq.size() == 0) throw InvalidArgument("run_sequence: empty sequence");
  Tracker tracker(config, std::move(extractor));
  RunResult r;
  const Image first = seq.frame(0);
  tracker.init(first, seq.ground_truth[0]);
  r.boxes.push_back(seq.ground_truth[0]);
  if (on_frame) on_frame(0, first, r.boxes.back());
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Image frame = seq.frame(i);
    StepResult s = tracker.step(frame);
    r.boxes.push_back(s.box);
    r.chosen_scale.push_back(s.diagnostics.chosen_scale);
    r.peak_only_scale.push_back(best_by_peak(s.diagnostics.candidates));
    if (r.chosen_scale.back() != r.peak_only_scale.back()) ++r.penalty_decided_frames;
    if (r.chosen_scale.back() != best_without_style(s.diagnostics.candidates)) ++r.style_decided_frames;
    if (s.diagnostics.weight_fallback) ++r.weight_fallbacks;
    if (on_frame) on_frame(i, frame, s.box);
  }
  r.report = evaluate(r.boxes, seq.ground_truth);
  return r;
}

inline nlohmann::ordered_json report_json(const MetricReport& m) {
  nlohmann::ordered_json j;
  j["frames"] = m.ious.size();
  j["mean_iou"] = m.mean_iou;
  j["auc"] = m.success.auc;
  j["precision_at_20"] = m.precision.at20;
  j["mean_center_error"] = m.mean_center_error;
  j["scale_ratio_mean"] = m.scale.mean_ratio;
  j["scale_ratio_jitter"] = m.scale.jitter;
  j["iou"] = m.ious;
  j["center_error"] = m.center_errors;
  j["success_curve"] = {{"thresholds", m.success.curve.thresholds}, {"values", m.success.curve.values}};
  j["precision_curve"] = {{"thresholds", m.precision.curve.thresholds}, {"values", m.precision.curve.values}};
  return j;
}

inline void write_boxes_csv(const std::vector<BoundingBox>& boxes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string(), std::nullopt);
  out.precision(17);
  out << "frame,x,y,w,h\n";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    out << i << ',' << boxes[i].x << ',' << boxes[i].y << ',' << boxes[i].width << ',' << boxes[i].height << '\n';
  }
}

inline std::vector<BoundingBox> read_boxes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string(), std::nullopt);
  std::vector<BoundingBox> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 || line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::size_t frame = 0;
    BoundingBox b;
    if (!(ss >> frame >> b.x >> b.y >> b.width >> b.height)) {
      throw FormatError("boxes csv line " + std::to_string(n) + ": malformed", std::nullopt, n);
    }
    out.push_back(b);
  }
  return out;
}

/// One row of the regularizer grid: which of mask / style / temporal /
/// spatiotemporal-style terms are switched on.
struct RegularizerSubset {
  std::string name;
  bool mask = false;
  bool style = false;
  bool temporal = false;
  bool st_style = false;

  RegularizationWeights apply(RegularizationWeights base) const {
    if (!mask) base.lambda_msk = 0.0;
    if (!style) base.lambda_sty = 0.0;
    if (!temporal) base.lambda_tmp = 0.0;
    if (!st_style) base.lambda_sts = 0.0;
    return base;
  }
};

inline std::vector<RegularizerSubset> standard_subsets() {
  return {{"B", false, false, false, false},       {"B+MR", true, false, false, false},
          {"B+CR", false, true, false, false},     {"B+TR", false, false, true, false},
          {"B+MR+CR", true, true, false, false},   {"B+MR+CR+TR", true, true, true, false},
          {"B+MR+CR+TR+SR", true, true, true, true}};
}

inline std::vector<WeightMode> all_weight_modes() {
  return {WeightMode::kUniform, WeightMode::kRandom, WeightMode::kAdaptive};
}

struct AblationCell {
  std::string subset;
  WeightMode mode = WeightMode::kUniform;
  MetricReport report;
};

/// Runs every (subset, mode) pair on every sequence. Cells are independent
/// and run on up to `workers` threads; results keep grid order.
inline std::vector<std::vector<AblationCell>> run_ablation(const std::vector<Sequence>& sequences,
                                                           const TrackerConfig& base,
                                                           const std::vector<RegularizerSubset>& subsets,
                                                           const std::vector<WeightMode>& modes,
                                                           std::size_t workers) {
  std::vector<std::vector<AblationCell>> out(sequences.size(),
                                             std::vector<AblationCell>(subsets.size() * modes.size()));
  const std::size_t per_seq = subsets.size() * modes.size();
  parallel_for(sequences.size() * per_seq, workers, [&](std::size_t job) {
    const std::size_t s = job / per_seq;
    const std::size_t cell = job % per_seq;
    const auto& subset = subsets[cell / modes.size()];
    TrackerConfig cfg = base;
    cfg.reg = subset.apply(base.reg);
    cfg.weight_mode = modes[cell % modes.size()];
    cfg.workers = 1;
    out[s][cell] = {subset.name, cfg.weight_mode, run_sequence(sequences[s], cfg).report};
  });
  return out;
}

inline nlohmann::ordered_json ablation_json(const std::vector<Sequence>& sequences,
                                            const std::vector<std::vector<AblationCell>>& grid,
                                            const TrackerConfig& base) {
  nlohmann::ordered_json j;
  j["seed"] = base.seed;
  j["config"] = format_config(base);
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    for (const auto& c : grid[s]) {
      nlohmann::ordered_json row;
      row["sequence"] = sequences[s].name;
      row["regularizers"] = c.subset;
      row["weights"] = to_string(c.mode);
      row["mean_iou"] = c.report.mean_iou;
      row["success_rate_50"] = c.report.success.curve.values[50];
      row["auc"] = c.report.success.auc;
      row["precision_at_20"] = c.report.precision.at20;
      row["scale_ratio_mean"] = c.report.scale.mean_ratio;
      row["scale_ratio_jitter"] = c.report.scale.jitter;
      rows.push_back(std::move(row));
    }
  }
  return j;
}

}  // namespace tacitdcf::eval
