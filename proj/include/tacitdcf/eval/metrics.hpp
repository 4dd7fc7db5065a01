#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/geometry.hpp"

namespace tacitdcf::eval {

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

struct Curve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

struct SuccessCurve {
  Curve curve;
  double auc = 0.0;
};

/// Fraction of frames with IoU > t for t = 0.00, 0.01, ..., 1.00.
inline SuccessCurve success_curve(std::span<const double> ious) {
  if (ious.empty()) throw InvalidArgument("success_curve: no frames");
  for (double v : ious) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("success_curve: IoU outside [0, 1]");
  }
  SuccessCurve out;
  double sum = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const auto hits = std::count_if(ious.begin(), ious.end(), [t](double v) { return v > t; });
    const double frac = static_cast<double>(hits) / static_cast<double>(ious.size());
    out.curve.thresholds.push_back(t);
    out.curve.values.push_back(frac);
    sum += frac;
  }
  out.auc = sum / 101.0;
  return out;
}

struct PrecisionCurve {
  Curve curve;
  double at20 = 0.0;
};

/// Fraction of frames with center error <= t for t = 0..50 px.
inline PrecisionCurve precision_curve(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("precision_curve: no frames");
  for (double e : errors) {
    if (!(e >= 0.0)) throw InvalidArgument("precision_curve: negative or NaN center error");
  }
  PrecisionCurve out;
  for (int t = 0; t <= 50; ++t) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    out.curve.thresholds.push_back(t);
    out.curve.values.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  out.at20 = out.curve.values[20];
  return out;
}

struct ScaleStats {
  double mean_ratio = 0.0;  // percent
  double jitter = 0.0;      // population std of the ratio, percent
};

inline ScaleStats scale_stats(std::span<const BoundingBox> pred, std::span<const BoundingBox> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("scale_stats: prediction and ground-truth lengths differ");
  if (pred.empty()) throw InvalidArgument("scale_stats: no frames");
  std::vector<double> r;
  r.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred[i].valid() || !gt[i].valid()) throw InvalidArgument("scale_stats: invalid box");
    r.push_back(100.0 * pred[i].area() / gt[i].area());
  }
  ScaleStats s;
  for (double v : r) s.mean_ratio += v;
  s.mean_ratio /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - s.mean_ratio) * (v - s.mean_ratio);
  s.jitter = std::sqrt(var / static_cast<double>(r.size()));
  return s;
}

struct MetricReport {
  std::vector<double> ious;
  std::vector<double> center_errors;
  SuccessCurve success;
  PrecisionCurve precision;
  double mean_iou = 0.0;
  double mean_center_error = 0.0;
  ScaleStats scale;
};

inline MetricReport evaluate(std::span<const BoundingBox> pred, std::span<const BoundingBox> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("evaluate: prediction and ground-truth lengths differ");
  MetricReport m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    m.ious.push_back(iou(pred[i], gt[i]));
    m.center_errors.push_back(center_distance(pred[i], gt[i]));
    m.mean_iou += m.ious.back();
    m.mean_center_error += m.center_errors.back();
  }
  m.success = success_curve(m.ious);
  m.precision = precision_curve(m.center_errors);
  m.mean_iou /= static_cast<double>(pred.size());
  m.mean_center_error /= static_cast<double>(pred.size());
  m.scale = scale_stats(pred, gt);
  return m;
}

}  // namespace tacitdcf::eval
