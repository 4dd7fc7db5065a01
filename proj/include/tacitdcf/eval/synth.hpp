#pragma once

// Deterministic synthetic sequences with exact ground truth: a textured
// target over a textured background, moved, zoomed, occluded or re-textured
// per scenario.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/eval/sequence.hpp"
#include "tacitdcf/image.hpp"

namespace tacitdcf::eval {

enum class Scenario { kStatic, kTranslate, kZoom, kOcclude, kRestyle };

inline const std::vector<std::pair<std::string, Scenario>>& scenario_names() {
  static const std::vector<std::pair<std::string, Scenario>> names = {{"static", Scenario::kStatic},
                                                                      {"translate", Scenario::kTranslate},
                                                                      {"zoom", Scenario::kZoom},
                                                                      {"occlude", Scenario::kOcclude},
                                                                      {"restyle", Scenario::kRestyle}};
  return names;
}

inline std::string to_string(Scenario s) {
  for (const auto& [name, v] : scenario_names())
    if (v == s) return name;
  return "unknown";
}

inline std::optional<Scenario> parse_scenario(const std::string& name) {
  for (const auto& [n, v] : scenario_names())
    if (n == name) return v;
  return std::nullopt;
}

struct SynthSpec {
  Scenario scenario = Scenario::kStatic;
  std::size_t frames = 50;
  std::size_t frame_width = 160;
  std::size_t frame_height = 160;
  double target_size = 32.0;
  double start_x = 64.0;  // top-left of the frame-0 box
  double start_y = 64.0;
  double dx = 0.0;    // pixels per frame
  double dy = 0.0;
  double zoom = 0.0;  // relative growth per frame of each side
  double wobble = 0.0;  // amplitude of a deterministic positional shake, pixels
  std::size_t occlude_start = 20;
  std::size_t occlude_frames = 6;
  std::size_t restyle_frame = 30;
  std::uint64_t seed = 1;
};

/// Parameters used by the tests and the acceptance suite for each scenario.
inline SynthSpec default_spec(Scenario s) {
  SynthSpec p;
  p.scenario = s;
  switch (s) {
    case Scenario::kStatic:
      break;
    case Scenario::kTranslate:
      p.frames = 100;
      p.frame_width = 400;
      p.start_x = 24.0;
      p.dx = 3.0;
      break;
    case Scenario::kZoom:
      p.frames = 40;
      p.frame_width = 200;
      p.frame_height = 200;
      p.start_x = 84.0;
      p.start_y = 84.0;
      p.zoom = 0.01;
      break;
    case Scenario::kOcclude:
      p.frames = 60;
      p.frame_width = 240;
      p.start_x = 40.0;
      p.dx = 1.0;
      break;
    case Scenario::kRestyle:
      p.frames = 60;
      p.frame_width = 240;
      p.start_x = 40.0;
      p.dx = 1.0;
      p.zoom = 0.003;
      break;
  }
  return p;
}

namespace detail {

/// Random colored grid of `cells` x `cells` values in [lo, hi].
struct Texture {
  std::size_t cells = 0;
  std::vector<float> rgb;

  float sample(double u, double v, std::size_t c) const {
    // u, v in grid units; bilinear with edge clamping.
    const double fu = std::clamp(u, 0.0, static_cast<double>(cells - 1));
    const double fv = std::clamp(v, 0.0, static_cast<double>(cells - 1));
    const std::size_t u0 = static_cast<std::size_t>(fu);
    const std::size_t v0 = static_cast<std::size_t>(fv);
    const std::size_t u1 = std::min(u0 + 1, cells - 1);
    const std::size_t v1 = std::min(v0 + 1, cells - 1);
    const double tu = fu - static_cast<double>(u0);
    const double tv = fv - static_cast<double>(v0);
    auto at = [&](std::size_t y, std::size_t x) { return static_cast<double>(rgb[(y * cells + x) * 3 + c]); };
    return static_cast<float>((1 - tv) * ((1 - tu) * at(v0, u0) + tu * at(v0, u1)) +
                              tv * ((1 - tu) * at(v1, u0) + tu * at(v1, u1)));
  }
};

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Texture random_texture(std::size_t cells, double lo, double hi, std::mt19937_64& rng) {
  Texture t;
  t.cells = cells;
  t.rgb.resize(cells * cells * 3);
  for (float& v : t.rgb) v = static_cast<float>(lo + (hi - lo) * unit(rng));
  return t;
}

inline Image render_background(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  constexpr double kCell = 6.0;
  const std::size_t cells = static_cast<std::size_t>(std::ceil(std::max(w, h) / kCell)) + 2;
  const Texture tex = random_texture(cells, 0.15, 0.85, rng);
  Image img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = tex.sample(x / kCell, y / kCell, c);
  return img;
}

inline void paint_target(Image& img, const BoundingBox& box, const Texture& tex) {
  const long x0 = static_cast<long>(std::floor(box.x));
  const long y0 = static_cast<long>(std::floor(box.y));
  const long x1 = static_cast<long>(std::ceil(box.x + box.width));
  const long y1 = static_cast<long>(std::ceil(box.y + box.height));
  const double cells = static_cast<double>(tex.cells);
  for (long y = std::max(0L, y0); y < std::min<long>(y1, static_cast<long>(img.height())); ++y) {
    const double cy = y + 0.5;
    if (cy < box.y || cy >= box.y + box.height) continue;
    const double v = (cy - box.y) / box.height * cells - 0.5;
    for (long x = std::max(0L, x0); x < std::min<long>(x1, static_cast<long>(img.width())); ++x) {
      const double cx = x + 0.5;
      if (cx < box.x || cx >= box.x + box.width) continue;
      const double u = (cx - box.x) / box.width * cells - 0.5;
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = tex.sample(u, v, c);
    }
  }
}

}  // namespace detail

/// Ground-truth box of frame k.
inline BoundingBox synth_box(const SynthSpec& p, std::size_t k) {
  const double kk = static_cast<double>(k);
  const double side = p.target_size * std::pow(1.0 + p.zoom, kk);
  const double cx0 = p.start_x + 0.5 * p.target_size;
  const double cy0 = p.start_y + 0.5 * p.target_size;
  double cx = cx0 + p.dx * kk;
  double cy = cy0 + p.dy * kk;
  if (p.wobble > 0.0 && k > 0) {
    cx += p.wobble * std::sin(1.7 * kk);
    cy += p.wobble * std::cos(2.3 * kk);
  }
  return BoundingBox::from_center(cx, cy, side, side);
}

inline Sequence synth_sequence(const SynthSpec& p) {
  if (p.frames == 0) throw InvalidArgument("synth: need at least one frame");
  if (!(p.target_size >= 4.0)) throw InvalidArgument("synth: target size must be >= 4");
  if (!(p.zoom > -1.0)) throw InvalidArgument("synth: zoom must be > -1");
  if (p.frame_width < 8 || p.frame_height < 8) throw InvalidArgument("synth: frame too small");
  Sequence seq;
  seq.name = to_string(p.scenario);
  for (std::size_t k = 0; k < p.frames; ++k) {
    const BoundingBox b = synth_box(p, k);
    if (b.x < 0.0 || b.y < 0.0 || b.x + b.width > static_cast<double>(p.frame_width) ||
        b.y + b.height > static_cast<double>(p.frame_height)) {
      throw InvalidArgument("synth: target leaves the frame at frame " + std::to_string(k));
    }
    seq.ground_truth.push_back(b);
  }

  std::mt19937_64 rng(p.seed);
  const Image background = detail::render_background(p.frame_width, p.frame_height, rng);
  const detail::Texture target = detail::random_texture(8, 0.0, 1.0, rng);
  const detail::Texture restyled = detail::random_texture(8, 0.0, 1.0, rng);

  for (std::size_t k = 0; k < p.frames; ++k) {
    Image frame = background;
    const BoundingBox& b = seq.ground_truth[k];
    const bool swapped = p.scenario == Scenario::kRestyle && k >= p.restyle_frame;
    detail::paint_target(frame, b, swapped ? restyled : target);
    if (p.scenario == Scenario::kOcclude && k >= p.occlude_start && k < p.occlude_start + p.occlude_frames) {
      // A vertical bar sweeps left to right across the target.
      const double bar = b.width / 3.0;
      const double progress = (static_cast<double>(k - p.occlude_start) + 0.5) / static_cast<double>(p.occlude_frames);
      const double bx = b.x - bar + progress * (b.width + bar);
      for (std::size_t y = 0; y < frame.height(); ++y)
        for (long x = std::max(0L, static_cast<long>(std::floor(bx)));
             x < std::min<long>(static_cast<long>(std::ceil(bx + bar)), static_cast<long>(frame.width())); ++x)
          for (std::size_t c = 0; c < 3; ++c) frame.at(y, static_cast<std::size_t>(x), c) = 0.5f;
    }
    seq.images.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace tacitdcf::eval
