#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "tacitdcf/eval/config.hpp"
#include "tacitdcf/eval/runner.hpp"
#include "tacitdcf/eval/sequence.hpp"
#include "tacitdcf/eval/synth.hpp"

using namespace tacitdcf;
using namespace tacitdcf::eval;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("tacitdcf_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

void write_frames(const fs::path& dir, std::size_t n) {
  fs::create_directories(dir / "img");
  for (std::size_t i = 1; i <= n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.ppm", i);
    write_ppm(Image(8, 6, 0.5f), (dir / "img" / name).string());
  }
}

}  // namespace

TEST(GroundTruth, ConvertsToZeroBased) {
  const BoundingBox b = parse_groundtruth_line("10,20,30,40", 1);
  EXPECT_EQ(b.x, 9.0);
  EXPECT_EQ(b.y, 19.0);
  EXPECT_EQ(b.width, 30.0);
  EXPECT_EQ(b.height, 40.0);
  EXPECT_EQ(parse_groundtruth_line("10\t20\t30\t40", 1), b);
  EXPECT_EQ(parse_groundtruth_line(" 10 20 30 40\r", 1), b);
}

TEST(GroundTruth, MalformedLineReportsLineNumber) {
  try {
    parse_groundtruth_line("10,20,thirty,40", 7);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line().value_or(0), 7u);
  }
  EXPECT_THROW(parse_groundtruth_line("1,2,3,4,5", 1), FormatError);
  EXPECT_THROW(parse_groundtruth_line("1,2,0,4", 1), FormatError);
}

TEST(OtbLoader, ThreeFrameFixture) {
  TempDir tmp("otb3");
  write_frames(tmp.path(), 3);
  write_text(tmp.path() / "groundtruth_rect.txt", "1,1,4,4\n2,1,4,4\n3,1,4,4\n");
  const Sequence seq = load_otb_sequence(tmp.path());
  EXPECT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.ground_truth[2].x, 2.0);
  EXPECT_EQ(seq.frame(1).width(), 8u);
}

TEST(OtbLoader, CountMismatchNamesBothCounts) {
  TempDir tmp("otb4");
  write_frames(tmp.path(), 4);
  write_text(tmp.path() / "groundtruth_rect.txt", "1,1,4,4\n2,1,4,4\n3,1,4,4\n");
  try {
    load_otb_sequence(tmp.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('4'), std::string::npos) << msg;
    EXPECT_NE(msg.find('3'), std::string::npos) << msg;
  }
}

TEST(OtbLoader, BadLineInFileHasLineNumber) {
  TempDir tmp("otbbad");
  write_frames(tmp.path(), 2);
  write_text(tmp.path() / "groundtruth_rect.txt", "1,1,4,4\n1,1,x,4\n");
  try {
    load_otb_sequence(tmp.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line().value_or(0), 2u);
  }
  EXPECT_THROW(load_otb_sequence(tmp.path() / "nope"), FormatError);
}

TEST(OtbLoader, SaveLoadRoundTrip) {
  TempDir tmp("otbrt");
  SynthSpec spec = default_spec(Scenario::kTranslate);
  spec.frames = 3;
  const Sequence seq = synth_sequence(spec);
  save_otb_sequence(seq, tmp.path());
  const Sequence back = load_otb_sequence(tmp.path());
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.ground_truth[i], seq.ground_truth[i]);
  EXPECT_EQ(back.frame(0).width(), seq.frame(0).width());
}

TEST(Synth, StaticBoxesIdentical) {
  const Sequence s = synth_sequence(default_spec(Scenario::kStatic));
  EXPECT_EQ(s.size(), 50u);
  for (const auto& b : s.ground_truth) EXPECT_EQ(b, s.ground_truth.front());
}

TEST(Synth, TranslateIsArithmetic) {
  const Sequence s = synth_sequence(default_spec(Scenario::kTranslate));
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR(s.ground_truth[i].x - s.ground_truth[i - 1].x, 3.0, 1e-12);
}

TEST(Synth, ZoomCompounds) {
  SynthSpec spec = default_spec(Scenario::kZoom);
  spec.frames = 21;  // frame 0 plus 20 zoom steps
  const Sequence s = synth_sequence(spec);
  const double ratio = s.ground_truth.back().area() / s.ground_truth.front().area();
  EXPECT_NEAR(ratio, std::pow(1.01, 40), 1e-9);
  EXPECT_NEAR(ratio, 1.489, 1e-3);
}

TEST(Synth, DeterministicAndSeeded) {
  SynthSpec spec = default_spec(Scenario::kRestyle);
  spec.frames = 32;
  const Sequence a = synth_sequence(spec), b = synth_sequence(spec);
  EXPECT_EQ(a.images, b.images);
  spec.seed = 2;
  EXPECT_NE(synth_sequence(spec).images, a.images);
}

TEST(Synth, TargetLeavingFrameThrows) {
  SynthSpec spec = default_spec(Scenario::kTranslate);
  spec.frames = 200;
  EXPECT_THROW(synth_sequence(spec), InvalidArgument);
}

TEST(Config, RoundTrip) {
  TrackerConfig c;
  c.reg.lambda_sty = 0.125;
  c.learning_rate = 0.1 / 3.0;
  c.weight_mode = WeightMode::kRandom;
  c.solver = SolverMode::kGaussSeidel;
  c.cosine_window = false;
  c.seed = 99;
  const TrackerConfig back = parse_config(format_config(c));
  EXPECT_EQ(format_config(back), format_config(c));
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.weight_mode, WeightMode::kRandom);
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    parse_config("# comment\nlambda=0.1\nbogus=1\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line().value_or(0), 3u);
  }
  try {
    parse_config("scale_count=abc\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line().value_or(0), 1u);
  }
  EXPECT_THROW(parse_config("scale_count=4\n"), FormatError);
  EXPECT_EQ(parse_config("weight_mode = uniform  # trailing comment\n").weight_mode, WeightMode::kUniform);
}

TEST(Outputs, BoxesCsvRoundTrip) {
  TempDir tmp("csv");
  const std::vector<BoundingBox> boxes{{0.1, 2.0 / 3.0, 10.5, 20.25}, {1e-3, 5, 7, 9}};
  write_boxes_csv(boxes, tmp.path() / "boxes.csv");
  EXPECT_EQ(read_boxes_csv(tmp.path() / "boxes.csv"), boxes);
}

TEST(Outputs, ReportJsonRoundTrip) {
  const std::vector<BoundingBox> gt{{0, 0, 2, 2}, {0, 0, 2, 2}, {3, 3, 4, 4}};
  const std::vector<BoundingBox> pred{{0, 0, 2, 2}, {1, 0, 2, 2}, {3.5, 3.1, 4.2, 3.9}};
  const MetricReport m = evaluate(pred, gt);
  const auto j = nlohmann::ordered_json::parse(report_json(m).dump());
  EXPECT_EQ(j["mean_iou"].get<double>(), m.mean_iou);
  EXPECT_EQ(j["auc"].get<double>(), m.success.auc);
  EXPECT_EQ(j["iou"].get<std::vector<double>>(), m.ious);
  EXPECT_EQ(j["scale_ratio_jitter"].get<double>(), m.scale.jitter);
}

TEST(Ablation, OneRowPerCell) {
  SynthSpec spec = default_spec(Scenario::kTranslate);
  spec.frames = 4;
  const std::vector<Sequence> seqs{synth_sequence(spec)};
  TrackerConfig base;
  base.patch_size = 32;
  base.bank.levels = 1;
  const auto subsets = standard_subsets();
  const auto grid = run_ablation(seqs, base, subsets, all_weight_modes(), 1);
  ASSERT_EQ(grid.size(), 1u);
  EXPECT_EQ(grid[0].size(), subsets.size() * 3);
  const auto j = ablation_json(seqs, grid, base);
  EXPECT_EQ(j["rows"].size(), subsets.size() * 3);
}
