#include <gtest/gtest.h>

#include <numeric>

#include "tacitdcf/eval/metrics.hpp"
#include "tacitdcf/eval/synth.hpp"
#include "tacitdcf/tracker.hpp"

using namespace tacitdcf;
using namespace tacitdcf::eval;

namespace {

TrackerConfig small_config() {
  TrackerConfig c;
  c.patch_size = 64;
  c.bank.levels = 1;
  return c;
}

TrackerConfig input_only_config() {
  TrackerConfig c = small_config();
  c.bank.levels = 0;
  c.bank.include_input = true;
  return c;
}

Sequence scenario(Scenario s, std::size_t frames) {
  SynthSpec spec = default_spec(s);
  spec.frames = frames;
  return synth_sequence(spec);
}

FeatureStack sample(const Tracker& t, const Image& frame, const BoundingBox& box) {
  const auto& c = t.config();
  return filterbank_stack(extract_patch(frame, box, c.padding, c.patch_size, c.patch_size), c.bank);
}

std::vector<BoundingBox> track(const Sequence& seq, const TrackerConfig& cfg) {
  Tracker t(cfg);
  t.init(seq.frame(0), seq.ground_truth[0]);
  std::vector<BoundingBox> out{seq.ground_truth[0]};
  for (std::size_t i = 1; i < seq.size(); ++i) out.push_back(t.step(seq.frame(i)).box);
  return out;
}

}  // namespace

TEST(Tracker, SameFrameScoresAtOrigin) {
  const Sequence seq = scenario(Scenario::kStatic, 1);
  Tracker t(small_config());
  t.init(seq.frame(0), seq.ground_truth[0]);
  const CandidateScore s = t.score_candidate(sample(t, seq.frame(0), seq.ground_truth[0]), nullptr, 1.0);
  EXPECT_LE(std::abs(s.dx), 1.0);
  EXPECT_LE(std::abs(s.dy), 1.0);
  EXPECT_EQ(s.scale_factor, 1.0);
  EXPECT_GT(s.peak, 0.0);
}

TEST(Tracker, ShiftedSampleReportsTheShift) {
  // Patch 64 over a 64 px window (32 px target, padding 1): one patch pixel
  // per frame pixel.
  const Sequence seq = scenario(Scenario::kStatic, 1);
  Tracker t(small_config());
  const BoundingBox b = seq.ground_truth[0];
  t.init(seq.frame(0), b);
  for (const auto& [sx, sy] : std::vector<std::pair<double, double>>{{-4, 0}, {0, 3}, {5, -2}}) {
    const BoundingBox moved{b.x + sx, b.y + sy, b.width, b.height};
    const CandidateScore s = t.score_candidate(sample(t, seq.frame(0), moved), nullptr, 1.0);
    EXPECT_NEAR(s.dx, -sx, 1.0) << sx << "," << sy;
    EXPECT_NEAR(s.dy, -sy, 1.0) << sx << "," << sy;
  }
}

TEST(Tracker, StaticSceneDoesNotDrift) {
  const Sequence seq = scenario(Scenario::kStatic, 50);
  const auto boxes = track(seq, small_config());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    EXPECT_LE(center_distance(boxes[i], seq.ground_truth[i]), 1.0) << "frame " << i;
    EXPECT_NEAR(boxes[i].width, seq.ground_truth[i].width, 1.5) << "frame " << i;
  }
}

TEST(Tracker, InputLayerAloneFollowsTranslation) {
  const Sequence seq = scenario(Scenario::kTranslate, 30);
  const auto boxes = track(seq, input_only_config());
  const auto report = evaluate(boxes, seq.ground_truth);
  EXPECT_LE(report.mean_center_error, 1.0);
  EXPECT_GE(report.mean_iou, 0.9);
}

TEST(Tracker, SingleScaleKeepsSize) {
  TrackerConfig c = small_config();
  c.scale_count = 1;
  const Sequence seq = scenario(Scenario::kZoom, 10);
  const auto boxes = track(seq, c);
  for (const auto& b : boxes) {
    EXPECT_DOUBLE_EQ(b.width, seq.ground_truth[0].width);
    EXPECT_DOUBLE_EQ(b.height, seq.ground_truth[0].height);
  }
}

TEST(Tracker, HistoryLengthOne) {
  TrackerConfig c = small_config();
  c.history_length = 1;
  const Sequence seq = scenario(Scenario::kTranslate, 6);
  Tracker t(c);
  t.init(seq.frame(0), seq.ground_truth[0]);
  for (std::size_t i = 1; i < seq.size(); ++i) t.step(seq.frame(i));
  EXPECT_EQ(t.state().history.size(), 1u);
}

TEST(Tracker, BlackFrameStaysFinite) {
  const Image black(96, 96, 0.0f);
  Tracker t(input_only_config());
  t.init(black, BoundingBox{32, 32, 32, 32});
  const StepResult r = t.step(black);
  EXPECT_TRUE(std::isfinite(r.box.x) && std::isfinite(r.box.y) && std::isfinite(r.box.width));
  EXPECT_TRUE(r.box.valid());
}

TEST(Tracker, IdenticalLayersFuseLikeOne) {
  const Sequence seq = scenario(Scenario::kStatic, 1);
  const BoundingBox b = seq.ground_truth[0];
  const BankConfig input_only{0, 4, true};
  auto single = [&](const Patch& p) { return filterbank_stack(p, input_only); };
  auto doubled = [&](const Patch& p) {
    FeatureStack s = filterbank_stack(p, input_only);
    FeatureLayer copy = s.layers.front();
    copy.spec.layer_id = 1;
    copy.spec.name = "copy";
    s.layers.push_back(copy);
    return s;
  };
  TrackerConfig c = input_only_config();
  c.weight_mode = WeightMode::kUniform;
  Tracker a(c, single), d(c, doubled);
  a.init(seq.frame(0), b);
  d.init(seq.frame(0), b);
  const Patch patch = extract_patch(seq.frame(0), BoundingBox{b.x + 3, b.y, b.width, b.height}, c.padding, 64, 64);
  const CandidateScore sa = a.score_candidate(single(patch), nullptr, 1.0);
  const CandidateScore sd = d.score_candidate(doubled(patch), nullptr, 1.0);
  ASSERT_TRUE(sa.fused.same_shape(sd.fused));
  for (std::size_t i = 0; i < sa.fused.size(); ++i) EXPECT_NEAR(sa.fused.storage()[i], sd.fused.storage()[i], 1e-9);
  EXPECT_NEAR(sa.dx, sd.dx, 1e-9);
}

TEST(Tracker, WithoutRegularizersScoreIsPeak) {
  TrackerConfig c = small_config();
  c.reg = {0.0, 0.0, 0.0, 0.0};
  const Sequence seq = scenario(Scenario::kTranslate, 4);
  Tracker t(c);
  t.init(seq.frame(0), seq.ground_truth[0]);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const StepResult r = t.step(seq.frame(i));
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < r.diagnostics.candidates.size(); ++k) {
      const auto& cand = r.diagnostics.candidates[k];
      EXPECT_EQ(cand.penalty, 0.0);
      EXPECT_EQ(cand.score, cand.peak);
      if (cand.peak > r.diagnostics.candidates[argmax].peak) argmax = k;
    }
    EXPECT_EQ(r.diagnostics.candidates[r.diagnostics.chosen_scale].peak, r.diagnostics.candidates[argmax].peak);
  }
}

TEST(Tracker, AdaptiveWeightsStayNormalized) {
  const Sequence seq = scenario(Scenario::kTranslate, 8);
  Tracker t(small_config());
  t.init(seq.frame(0), seq.ground_truth[0]);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const StepResult r = t.step(seq.frame(i));
    for (Family f : kFamilies) {
      const auto& w = r.diagnostics.weights.family(f);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
      for (double v : w) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Tracker, Deterministic) {
  TrackerConfig c = small_config();
  c.weight_mode = WeightMode::kRandom;
  c.seed = 7;
  const Sequence seq = scenario(Scenario::kTranslate, 8);
  const auto a = track(seq, c);
  c.workers = 3;
  const auto b = track(seq, c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
    EXPECT_EQ(a[i].width, b[i].width);
  }
}

TEST(Tracker, GaussSeidelModeTracks) {
  TrackerConfig c = small_config();
  c.solver = SolverMode::kGaussSeidel;
  const Sequence seq = scenario(Scenario::kTranslate, 10);
  Tracker t(c);
  t.init(seq.frame(0), seq.ground_truth[0]);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const StepResult r = t.step(seq.frame(i));
    EXPECT_EQ(r.diagnostics.solver_reports.size(), t.state().bank.layers.size());
    EXPECT_GE(iou(r.box, seq.ground_truth[i]), 0.7) << "frame " << i;
  }
}

TEST(Tracker, RejectsMisuse) {
  const Sequence seq = scenario(Scenario::kStatic, 1);
  Tracker t(small_config());
  EXPECT_THROW(t.step(seq.frame(0)), InvalidArgument);
  EXPECT_THROW(t.init(seq.frame(0), BoundingBox{0, 0, 0, 10}), InvalidArgument);
  t.init(seq.frame(0), seq.ground_truth[0]);
  EXPECT_THROW(t.step(Image(50, 50)), InvalidArgument);
  FeatureStack other = sample(t, seq.frame(0), seq.ground_truth[0]);
  other.layers.pop_back();
  EXPECT_THROW(t.score_candidate(other, nullptr, 1.0), InvalidArgument);
}

TEST(TrackerConfig, Validation) {
  TrackerConfig c;
  c.scale_count = 4;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.learning_rate = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.bank.levels = 0;
  c.bank.include_input = false;
  EXPECT_THROW(Tracker{c}, InvalidArgument);
}
