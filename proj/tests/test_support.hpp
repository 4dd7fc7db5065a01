#pragma once

#include <random>

#include "tacitdcf/tensor.hpp"

namespace testing_support {

inline double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline tacitdcf::FeatureTensor random_tensor(std::size_t w, std::size_t h, std::size_t c, std::mt19937_64& rng,
                                             double lo = -1.0, double hi = 1.0) {
  tacitdcf::FeatureTensor t(w, h, c);
  for (double& v : t.storage()) v = uniform(rng, lo, hi);
  return t;
}

/// out(t) = sum_k sum_p f(p) x(p + t), periodic.
inline tacitdcf::FeatureTensor brute_correlate(const tacitdcf::FeatureTensor& f, const tacitdcf::FeatureTensor& x) {
  const std::size_t w = f.width(), h = f.height(), c = f.channels();
  tacitdcf::FeatureTensor out(w, h, 1);
  for (std::size_t ty = 0; ty < h; ++ty)
    for (std::size_t tx = 0; tx < w; ++tx) {
      double s = 0.0;
      for (std::size_t py = 0; py < h; ++py)
        for (std::size_t px = 0; px < w; ++px)
          for (std::size_t k = 0; k < c; ++k) s += f(py, px, k) * x((py + ty) % h, (px + tx) % w, k);
      out(ty, tx) = s;
    }
  return out;
}

inline double max_abs(const tacitdcf::FeatureTensor& t) {
  double m = 0.0;
  for (double v : t.storage()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const tacitdcf::FeatureTensor& a, const tacitdcf::FeatureTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.storage()[i] - b.storage()[i]));
  return m;
}

}  // namespace testing_support
