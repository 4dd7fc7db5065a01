#pragma once

#include <algorithm>
#include <cmath>

#include "tacitdcf/error.hpp"

namespace tacitdcf {

struct Size2 {
  double width = 0.0;
  double height = 0.0;
};

/// Axis-aligned box, top-left origin, 0-based pixel coordinates.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  bool valid() const noexcept { return width > 0.0 && height > 0.0 && std::isfinite(x) && std::isfinite(y); }
  double area() const noexcept { return width * height; }
  double center_x() const noexcept { return x + 0.5 * width; }
  double center_y() const noexcept { return y + 0.5 * height; }
  Size2 size() const noexcept { return {width, height}; }

  static BoundingBox from_center(double cx, double cy, double w, double h) noexcept {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }

  bool operator==(const BoundingBox&) const = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x + a.width, b.x + b.width) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.height, b.y + b.height) - std::max(a.y, b.y);
  return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

inline double center_distance(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

}  // namespace tacitdcf
