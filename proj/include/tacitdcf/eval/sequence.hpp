#pragma once

// Sequences of frames with per-frame ground truth, and the OTB on-disk
// layout: <dir>/img/0001.jpg ... plus <dir>/groundtruth_rect.txt.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/geometry.hpp"
#include "tacitdcf/image.hpp"

namespace tacitdcf::eval {

using ImageReader = std::function<Image(const std::string&)>;

/// Frames are either held in memory or loaded lazily from `frame_paths`.
struct Sequence {
  std::string name;
  std::vector<Image> images;
  std::vector<std::string> frame_paths;
  std::vector<BoundingBox> ground_truth;
  ImageReader reader;

  std::size_t size() const noexcept { return images.empty() ? frame_paths.size() : images.size(); }

  Image frame(std::size_t i) const {
    if (i >= size()) throw InvalidArgument("sequence '" + name + "': frame index out of range");
    if (!images.empty()) return images[i];
    return reader ? reader(frame_paths[i]) : read_pnm(frame_paths[i]);
  }

  void validate() const {
    if (size() != ground_truth.size()) {
      throw FormatError("sequence '" + name + "': " + std::to_string(size()) + " frames but " +
                            std::to_string(ground_truth.size()) + " ground-truth boxes",
                        std::nullopt);
    }
    for (const auto& b : ground_truth) {
      if (!b.valid()) throw FormatError("sequence '" + name + "': invalid ground-truth box", std::nullopt);
    }
  }
};

/// Parses one "x,y,w,h" line (comma, tab or space separated), converting the
/// 1-based convention to 0-based.
inline BoundingBox parse_groundtruth_line(const std::string& raw, std::size_t line_no) {
  std::string line = raw;
  std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == '\t' || c == ';'; }, ' ');
  std::istringstream in(line);
  double v[4];
  for (double& x : v) {
    if (!(in >> x)) throw FormatError("groundtruth line " + std::to_string(line_no) + ": expected x,y,w,h", std::nullopt, line_no);
  }
  std::string rest;
  if (in >> rest) throw FormatError("groundtruth line " + std::to_string(line_no) + ": trailing fields", std::nullopt, line_no);
  const BoundingBox b{v[0] - 1.0, v[1] - 1.0, v[2], v[3]};
  if (!b.valid()) throw FormatError("groundtruth line " + std::to_string(line_no) + ": non-positive size", std::nullopt, line_no);
  return b;
}

inline std::vector<BoundingBox> read_groundtruth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string(), std::nullopt);
  std::vector<BoundingBox> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_groundtruth_line(line, n));
  }
  return out;
}

inline bool is_frame_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".bmp";
}

inline Sequence load_otb_sequence(const std::filesystem::path& dir, ImageReader reader = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw FormatError("sequence directory not found: " + dir.string(), std::nullopt);
  const fs::path img = dir / "img";
  if (!fs::is_directory(img)) throw FormatError("missing img/ directory in " + dir.string(), std::nullopt);
  const fs::path gt = dir / "groundtruth_rect.txt";
  if (!fs::exists(gt)) throw FormatError("missing groundtruth_rect.txt in " + dir.string(), std::nullopt);

  Sequence seq;
  seq.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  for (const auto& e : fs::directory_iterator(img)) {
    if (e.is_regular_file() && is_frame_file(e.path())) seq.frame_paths.push_back(e.path().string());
  }
  std::sort(seq.frame_paths.begin(), seq.frame_paths.end());
  seq.ground_truth = read_groundtruth(gt);
  seq.reader = std::move(reader);
  if (seq.frame_paths.empty()) throw FormatError("no frames in " + img.string(), std::nullopt);
  seq.validate();
  return seq;
}

/// Writes `seq` in the OTB layout (PPM frames, 1-based ground truth).
inline void save_otb_sequence(const Sequence& seq, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "img");
  std::ofstream gt(dir / "groundtruth_rect.txt");
  if (!gt) throw FormatError("cannot write ground truth in " + dir.string(), std::nullopt);
  gt.precision(17);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.ppm", i + 1);
    write_ppm(seq.frame(i), (dir / "img" / name).string());
    const auto& b = seq.ground_truth[i];
    gt << b.x + 1.0 << ',' << b.y + 1.0 << ',' << b.width << ',' << b.height << '\n';
  }
}

}  // namespace tacitdcf::eval
