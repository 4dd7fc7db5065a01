// Command-line front end: track / bench / ablate / synth.
//
// Exit status: 0 on success, 1 on runtime failure, 2 on usage errors.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include "tacitdcf/tacitdcf.hpp"

#ifdef TACITDCF_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

namespace fs = std::filesystem;
using namespace tacitdcf;
using namespace tacitdcf::eval;

namespace {

constexpr int kUsage = 2;
constexpr int kFailure = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Image read_frame(const std::string& path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".ppm" || ext == ".pgm") return read_pnm(path);
#ifdef TACITDCF_HAVE_OPENCV
  const cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) throw FormatError("cannot decode " + path, std::nullopt);
  Image img(static_cast<std::size_t>(m.cols), static_cast<std::size_t>(m.rows));
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), static_cast<std::size_t>(c)) =
            static_cast<float>(row[x][2 - c]) / 255.0f;
  }
  return img;
#else
  throw FormatError("built without OpenCV; only PPM/PGM frames are readable: " + path, std::nullopt);
#endif
}

TrackerConfig make_config(const std::string& config_path, std::optional<std::uint64_t> seed,
                          std::optional<std::size_t> workers) {
  TrackerConfig cfg = config_path.empty() ? TrackerConfig{} : load_config(config_path);
  if (seed) cfg.seed = *seed;
  cfg.workers = workers ? *workers : std::min<std::size_t>(default_worker_count(), cfg.scale_count);
  return cfg;
}

void write_json(const nlohmann::ordered_json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string(), std::nullopt);
  out << j.dump(2) << '\n';
}

void write_run(const Sequence& seq, const RunResult& r, const TrackerConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_boxes_csv(r.boxes, dir / "boxes.csv");
  nlohmann::ordered_json j;
  j["sequence"] = seq.name;
  j["config"] = format_config(cfg);
  j["report"] = report_json(r.report);
  write_json(j, dir / "report.json");
}

Sequence scenario_sequence(const std::string& name, std::uint64_t seed, std::optional<std::size_t> frames,
                           double wobble) {
  const auto sc = parse_scenario(name);
  if (!sc) throw UsageError("--scenario: unknown scenario '" + name + "'");
  SynthSpec spec = default_spec(*sc);
  spec.seed = seed;
  spec.wobble = wobble;
  if (frames) spec.frames = *frames;
  return synth_sequence(spec);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-layer regularized correlation-filter tracker"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value tracker config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed (weights in random mode, synthetic textures)");
    sub->add_option("--workers", workers, "worker threads (default: TACITDCF_THREADS or hardware)");
  };

  auto* track = app.add_subcommand("track", "run the tracker on one OTB-layout sequence");
  std::string seq_dir;
  std::string out_dir;
  bool overlay = false;
  track->add_option("--seq", seq_dir, "sequence directory (img/ + groundtruth_rect.txt)")->required();
  track->add_option("--out", out_dir, "output directory")->required();
  track->add_flag("--overlay", overlay, "also write frames with the tracked box drawn");
  add_common(track);

  auto* bench = app.add_subcommand("bench", "run every sequence under a directory");
  std::string bench_root;
  bench->add_option("--root", bench_root, "directory of sequence directories")->required();
  bench->add_option("--out", out_dir, "output directory")->required();
  add_common(bench);

  auto* ablate = app.add_subcommand("ablate", "regularizer subset x weight-mode grid");
  std::string scenario;
  std::optional<std::size_t> frames;
  double wobble = 0.0;
  std::string ablate_out;
  auto* scen_opt = ablate->add_option("--scenario", scenario, "synthetic scenario name");
  ablate->add_option("--seq", seq_dir, "OTB-layout sequence directory")->excludes(scen_opt);
  ablate->add_option("--frames", frames, "override the scenario's frame count");
  ablate->add_option("--out", ablate_out, "output file (default: ablation.json)");
  add_common(ablate);

  auto* synth = app.add_subcommand("synth", "write a synthetic sequence in OTB layout");
  synth->add_option("--scenario", scenario, "static | translate | zoom | occlude | restyle")->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--frames", frames, "override the frame count");
  synth->add_option("--wobble", wobble, "positional shake amplitude in pixels");
  synth->add_option("--seed", seed, "texture seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*track) {
      if (!fs::is_directory(seq_dir)) throw UsageError("--seq: sequence directory not found: " + seq_dir);
      const TrackerConfig cfg = make_config(config_path, seed, workers);
      const Sequence seq = load_otb_sequence(seq_dir, read_frame);
      const fs::path out = out_dir;
      if (overlay) fs::create_directories(out / "overlay");
      FrameCallback cb;
      if (overlay) {
        cb = [&](std::size_t i, const Image& frame, const BoundingBox& box) {
          Image img = frame;
          draw_box(img, seq.ground_truth[i], 0.0f, 1.0f, 0.0f);
          draw_box(img, box, 1.0f, 0.0f, 0.0f);
          char name[32];
          std::snprintf(name, sizeof name, "%04zu.ppm", i + 1);
          write_ppm(img, (out / "overlay" / name).string());
        };
      }
      const RunResult r = run_sequence(seq, cfg, {}, cb);
      write_run(seq, r, cfg, out);
      std::printf("%s: %zu frames, mean IoU %.4f, AUC %.4f, P@20 %.4f\n", seq.name.c_str(), seq.size(),
                  r.report.mean_iou, r.report.success.auc, r.report.precision.at20);
    } else if (*bench) {
      if (!fs::is_directory(bench_root)) throw UsageError("--root: directory not found: " + bench_root);
      TrackerConfig cfg = make_config(config_path, seed, workers);
      std::vector<fs::path> dirs;
      for (const auto& e : fs::directory_iterator(bench_root))
        if (e.is_directory() && fs::exists(e.path() / "groundtruth_rect.txt")) dirs.push_back(e.path());
      std::sort(dirs.begin(), dirs.end());
      if (dirs.empty()) throw UsageError("--root: no sequence directories under " + bench_root);
      const std::size_t pool = cfg.workers;
      cfg.workers = 1;
      std::vector<Sequence> seqs;
      for (const auto& d : dirs) seqs.push_back(load_otb_sequence(d, read_frame));
      std::vector<RunResult> results(seqs.size());
      parallel_for(seqs.size(), pool, [&](std::size_t i) { results[i] = run_sequence(seqs[i], cfg); });
      nlohmann::ordered_json summary;
      auto& rows = summary["sequences"] = nlohmann::ordered_json::array();
      std::vector<double> all_iou;
      std::vector<double> all_err;
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        write_run(seqs[i], results[i], cfg, fs::path(out_dir) / seqs[i].name);
        rows.push_back({{"sequence", seqs[i].name},
                        {"mean_iou", results[i].report.mean_iou},
                        {"auc", results[i].report.success.auc},
                        {"precision_at_20", results[i].report.precision.at20}});
        all_iou.insert(all_iou.end(), results[i].report.ious.begin(), results[i].report.ious.end());
        all_err.insert(all_err.end(), results[i].report.center_errors.begin(), results[i].report.center_errors.end());
      }
      summary["overall"] = {{"frames", all_iou.size()},
                            {"auc", success_curve(all_iou).auc},
                            {"precision_at_20", precision_curve(all_err).at20}};
      write_json(summary, fs::path(out_dir) / "summary.json");
      std::printf("%zu sequences, overall AUC %.4f\n", seqs.size(), summary["overall"]["auc"].get<double>());
    } else if (*ablate) {
      if (scenario.empty() && seq_dir.empty()) throw UsageError("ablate: one of --scenario or --seq is required");
      TrackerConfig cfg = make_config(config_path, seed, workers);
      std::vector<Sequence> seqs;
      if (!scenario.empty()) {
        seqs.push_back(scenario_sequence(scenario, cfg.seed, frames, wobble));
      } else {
        if (!fs::is_directory(seq_dir)) throw UsageError("--seq: sequence directory not found: " + seq_dir);
        seqs.push_back(load_otb_sequence(seq_dir, read_frame));
      }
      const std::size_t pool = cfg.workers;
      const auto grid = run_ablation(seqs, cfg, standard_subsets(), all_weight_modes(), pool);
      cfg.workers = 1;  // keep the recorded config independent of the host
      const fs::path out = ablate_out.empty() ? fs::path("ablation.json") : fs::path(ablate_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_json(ablation_json(seqs, grid, cfg), out);
      std::printf("wrote %s (%zu rows)\n", out.string().c_str(), grid.front().size());
    } else if (*synth) {
      const Sequence seq = scenario_sequence(scenario, seed.value_or(1), frames, wobble);
      save_otb_sequence(seq, out_dir);
      std::printf("wrote %zu frames to %s\n", seq.size(), out_dir.c_str());
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return 0;
}
