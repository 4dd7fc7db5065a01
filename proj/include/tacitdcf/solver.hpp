#pragma once

// Gauss-Seidel solver for the mask-regularized filter problem
//
//   min_f  sum_t a_t ||S(f, x_t) - y||^2 + lambda_msk * sum_k ||w . f^k||^2
//
// in the Fourier domain. With the unnormalized DFT the data term is
// block-diagonal over frequencies (one channels x channels block each) and
// the penalty becomes a convolution of the filter spectrum with c = DFT(w)/N,
// so the normal equations read
//
//   (sum_t a_t x_t x_t^H) v(w) + lambda_msk * sum_d k(d) v(w - d) = sum_t a_t x_t conj(y)
//
// where v(w) stacks the filter spectrum over channels and
// k(d) = sum_a conj(c(a)) c(a + d). Keeping only the largest coefficients of
// c makes k sparse. Sweeps solve each frequency block exactly (block
// Gauss-Seidel) using the latest values of its neighbours.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/fft.hpp"
#include "tacitdcf/filter.hpp"
#include "tacitdcf/tensor.hpp"

namespace tacitdcf {

using cplx = std::complex<double>;

struct PenaltyTap {
  long dy = 0;
  long dx = 0;
  cplx value;
};

/// Sparse convolution kernel of the penalty's normal-equation operator.
struct PenaltyKernel {
  std::size_t width = 0;
  std::size_t height = 0;
  double center = 0.0;              // k(0), real and positive
  std::vector<PenaltyTap> off_center;  // all taps with (dy, dx) != (0, 0)
};

/// Builds the operator kernel from the K largest-magnitude Fourier
/// coefficients of the penalty (plus their conjugate partners, so a real
/// penalty keeps a Hermitian kernel). max_coeffs >= W*H keeps everything.
inline PenaltyKernel penalty_kernel(const SpatialPenalty& penalty, std::size_t max_coeffs) {
  const std::size_t w = penalty.width();
  const std::size_t h = penalty.height();
  const std::size_t n = w * h;
  if (n == 0) throw InvalidArgument("penalty_kernel: empty penalty");
  if (max_coeffs == 0) throw InvalidArgument("penalty_kernel: need at least one coefficient");
  Spectrum spec = dft2(penalty.values());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (auto& v : spec.storage()) v *= inv_n;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(spec.storage()[a]) > std::abs(spec.storage()[b]);
  });
  std::vector<bool> keep(n, false);
  std::size_t kept = 0;
  for (std::size_t idx : order) {
    if (kept >= max_coeffs) break;
    if (keep[idx]) continue;
    keep[idx] = true;
    ++kept;
    const std::size_t y = idx / w;
    const std::size_t x = idx % w;
    const std::size_t mirror = ((h - y) % h) * w + (w - x) % w;
    if (!keep[mirror]) {
      keep[mirror] = true;
      ++kept;
    }
  }
  struct Coeff {
    long y;
    long x;
    cplx v;
  };
  std::vector<Coeff> coeffs;
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (keep[idx] && spec.storage()[idx] != cplx(0.0, 0.0)) {
      coeffs.push_back({static_cast<long>(idx / w), static_cast<long>(idx % w), spec.storage()[idx]});
    }
  }
  auto wrap = [](long v, long m) {
    v %= m;
    if (v < 0) v += m;
    if (v >= (m + 1) / 2) v -= m;  // signed representative
    return v;
  };
  // k(d) = sum_a conj(c(a)) c(a + d)
  std::map<std::pair<long, long>, cplx> taps;
  for (const auto& a : coeffs) {
    for (const auto& b : coeffs) {
      const long dy = wrap(b.y - a.y, static_cast<long>(h));
      const long dx = wrap(b.x - a.x, static_cast<long>(w));
      taps[{dy, dx}] += std::conj(a.v) * b.v;
    }
  }
  PenaltyKernel kernel;
  kernel.width = w;
  kernel.height = h;
  for (const auto& [d, v] : taps) {
    if (d.first == 0 && d.second == 0) {
      kernel.center = v.real();
    } else if (std::abs(v) > 0.0) {
      kernel.off_center.push_back({d.first, d.second, v});
    }
  }
  return kernel;
}

/// Accumulated normal equations of the data term.
class NormalEquations {
 public:
  NormalEquations() = default;
  NormalEquations(std::size_t width, std::size_t height, std::size_t channels)
      : width_(width), height_(height), channels_(channels),
        lhs_(width * height * channels * channels), rhs_(width, height, channels) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t frequencies() const noexcept { return width_ * height_; }

  /// lhs(w)(k, k') for frequency index i.
  cplx lhs(std::size_t i, std::size_t k, std::size_t k2) const noexcept {
    return lhs_[(i * channels_ + k) * channels_ + k2];
  }
  const Spectrum& rhs() const noexcept { return rhs_; }

  /// Adds weight * (x x^H, x conj(y)) at every frequency.
  void add_sample(const Spectrum& sample, const Spectrum& label, double weight) {
    if (sample.width() != width_ || sample.height() != height_ || sample.channels() != channels_) {
      throw InvalidArgument("NormalEquations: sample shape mismatch");
    }
    if (label.width() != width_ || label.height() != height_ || label.channels() != 1) {
      throw InvalidArgument("NormalEquations: label shape mismatch");
    }
    const std::size_t c = channels_;
    for (std::size_t i = 0; i < frequencies(); ++i) {
      const cplx* x = sample.storage().data() + i * c;
      const cplx cy = std::conj(label.storage()[i]);
      for (std::size_t k = 0; k < c; ++k) {
        rhs_.storage()[i * c + k] += weight * x[k] * cy;
        for (std::size_t k2 = 0; k2 < c; ++k2) lhs_[(i * c + k) * c + k2] += weight * x[k] * std::conj(x[k2]);
      }
    }
  }

  void scale(double factor) {
    for (auto& v : lhs_) v *= factor;
    for (auto& v : rhs_.storage()) v *= factor;
  }

  /// Per-frequency trace of lhs (the shared closed-form denominator without lambda).
  Spectrum energy() const {
    Spectrum e(width_, height_, 1);
    for (std::size_t i = 0; i < frequencies(); ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < channels_; ++k) s += lhs(i, k, k).real();
      e.storage()[i] = s;
    }
    return e;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<cplx> lhs_;
  Spectrum rhs_;
};

struct SolverOptions {
  std::size_t max_iters = 50;
  double tol = 1e-5;
  double ridge = 0.0;  // extra lambda * I on every block
};

struct SolverReport {
  std::size_t sweeps = 0;
  bool converged = false;
  double residual = 0.0;  // ||b - A v|| / ||b||
  std::vector<double> residual_history;  // after each sweep
};

namespace detail {

/// In-place Cholesky of a Hermitian positive-definite c x c block (lower
/// factor). Returns false if a pivot is not positive.
inline bool cholesky(std::vector<cplx>& a, std::size_t c, double pivot_floor) {
  for (std::size_t j = 0; j < c; ++j) {
    double d = a[j * c + j].real();
    for (std::size_t p = 0; p < j; ++p) d -= std::norm(a[j * c + p]);
    if (!(d > pivot_floor)) return false;
    const double l = std::sqrt(d);
    a[j * c + j] = l;
    for (std::size_t i = j + 1; i < c; ++i) {
      cplx s = a[i * c + j];
      for (std::size_t p = 0; p < j; ++p) s -= a[i * c + p] * std::conj(a[j * c + p]);
      a[i * c + j] = s / l;
    }
  }
  return true;
}

inline void cholesky_solve(const cplx* l, std::size_t c, cplx* b) {
  for (std::size_t i = 0; i < c; ++i) {
    cplx s = b[i];
    for (std::size_t p = 0; p < i; ++p) s -= l[i * c + p] * b[p];
    b[i] = s / l[i * c + i].real();
  }
  for (std::size_t ii = c; ii-- > 0;) {
    cplx s = b[ii];
    for (std::size_t p = ii + 1; p < c; ++p) s -= std::conj(l[p * c + ii]) * b[p];
    b[ii] = s / l[ii * c + ii].real();
  }
}

class BlockSystem {
 public:
  BlockSystem(const NormalEquations& ne, const PenaltyKernel& kernel, double lambda_msk, double ridge)
      : ne_(ne), kernel_(kernel), lambda_(lambda_msk), ridge_(ridge) {
    if (kernel.width != ne.width() || kernel.height != ne.height()) {
      throw InvalidArgument("gauss_seidel: penalty kernel grid does not match the problem");
    }
    const std::size_t c = ne.channels();
    const double diag = lambda_ * kernel_.center + ridge_;
    double scale = 0.0;
    for (std::size_t i = 0; i < ne.frequencies(); ++i)
      for (std::size_t k = 0; k < c; ++k) scale = std::max(scale, ne.lhs(i, k, k).real());
    const double floor = 1e-13 * std::max(scale + diag, 1e-300);
    factors_.resize(ne.frequencies() * c * c);
    std::vector<cplx> block(c * c);
    for (std::size_t i = 0; i < ne.frequencies(); ++i) {
      for (std::size_t k = 0; k < c; ++k)
        for (std::size_t k2 = 0; k2 < c; ++k2) block[k * c + k2] = ne.lhs(i, k, k2) + (k == k2 ? diag : 0.0);
      if (!cholesky(block, c, floor)) {
        throw NumericError("gauss_seidel: singular system at frequency index " + std::to_string(i));
      }
      std::copy(block.begin(), block.end(), factors_.begin() + static_cast<long>(i * c * c));
    }
  }

  /// Penalty coupling from neighbours: sum_{d != 0} k(d) v(w - d), per channel.
  void coupling(const Spectrum& v, std::size_t y, std::size_t x, cplx* out) const {
    const std::size_t c = ne_.channels();
    const long h = static_cast<long>(ne_.height());
    const long w = static_cast<long>(ne_.width());
    for (std::size_t k = 0; k < c; ++k) out[k] = 0.0;
    for (const auto& tap : kernel_.off_center) {
      long sy = static_cast<long>(y) - tap.dy;
      long sx = static_cast<long>(x) - tap.dx;
      sy = (sy % h + h) % h;
      sx = (sx % w + w) % w;
      const cplx* src = v.storage().data() + (static_cast<std::size_t>(sy) * ne_.width() + static_cast<std::size_t>(sx)) * c;
      for (std::size_t k = 0; k < c; ++k) out[k] += tap.value * src[k];
    }
  }

  void sweep(Spectrum& v) const {
    const std::size_t c = ne_.channels();
    std::vector<cplx> r(c);
    for (std::size_t y = 0; y < ne_.height(); ++y) {
      for (std::size_t x = 0; x < ne_.width(); ++x) {
        const std::size_t i = y * ne_.width() + x;
        coupling(v, y, x, r.data());
        for (std::size_t k = 0; k < c; ++k) r[k] = ne_.rhs().storage()[i * c + k] - lambda_ * r[k];
        cholesky_solve(factors_.data() + i * c * c, c, r.data());
        for (std::size_t k = 0; k < c; ++k) v.storage()[i * c + k] = r[k];
      }
    }
  }

  /// r = b - A v, stored like the solution.
  Spectrum residual(const Spectrum& v) const {
    const std::size_t c = ne_.channels();
    const double diag = lambda_ * kernel_.center + ridge_;
    std::vector<cplx> coup(c);
    Spectrum r(ne_.width(), ne_.height(), c);
    for (std::size_t y = 0; y < ne_.height(); ++y) {
      for (std::size_t x = 0; x < ne_.width(); ++x) {
        const std::size_t i = y * ne_.width() + x;
        coupling(v, y, x, coup.data());
        for (std::size_t k = 0; k < c; ++k) {
          cplx av = lambda_ * coup[k] + diag * v.storage()[i * c + k];
          for (std::size_t k2 = 0; k2 < c; ++k2) av += ne_.lhs(i, k, k2) * v.storage()[i * c + k2];
          r.storage()[i * c + k] = ne_.rhs().storage()[i * c + k] - av;
        }
      }
    }
    return r;
  }

  double relative_norm(const Spectrum& r) const {
    double rn = 0.0;
    double bn = 0.0;
    for (const auto& v : r.storage()) rn += std::norm(v);
    for (const auto& v : ne_.rhs().storage()) bn += std::norm(v);
    return bn > 0.0 ? std::sqrt(rn / bn) : std::sqrt(rn);
  }

  double relative_residual(const Spectrum& v) const { return relative_norm(residual(v)); }

 private:
  const NormalEquations& ne_;
  const PenaltyKernel& kernel_;
  double lambda_;
  double ridge_;
  std::vector<cplx> factors_;
};

/// Averages v(w) with conj(v(-w)), the projection onto real spatial filters.
inline void make_hermitian(Spectrum& v) {
  const std::size_t w = v.width();
  const std::size_t h = v.height();
  const std::size_t c = v.channels();
  Spectrum src = v;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t my = (h - y) % h;
      const std::size_t mx = (w - x) % w;
      for (std::size_t k = 0; k < c; ++k) v(y, x, k) = 0.5 * (src(y, x, k) + std::conj(src(my, mx, k)));
    }
  }
}

}  // namespace detail

/// Runs block Gauss-Seidel sweeps on `solution` (warm start) until the
/// relative residual drops below tol or max_iters sweeps are spent. Returns
/// the best iterate seen; non-convergence is reported, not thrown.
inline SolverReport gauss_seidel(const NormalEquations& ne, const PenaltyKernel& kernel, double lambda_msk,
                                 Spectrum& solution, const SolverOptions& options = {}) {
  if (lambda_msk < 0.0) throw InvalidArgument("gauss_seidel: lambda_msk must be >= 0");
  if (solution.empty()) solution = Spectrum(ne.width(), ne.height(), ne.channels());
  if (solution.width() != ne.width() || solution.height() != ne.height() || solution.channels() != ne.channels()) {
    throw InvalidArgument("gauss_seidel: initial solution shape mismatch");
  }
  const detail::BlockSystem system(ne, kernel, lambda_msk, options.ridge);
  SolverReport report;
  double best = system.relative_residual(solution);
  report.residual = best;
  if (best <= options.tol) {
    report.converged = true;
    return report;
  }
  Spectrum best_iterate = solution;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    system.sweep(solution);
    const double r = system.relative_residual(solution);
    report.residual_history.push_back(r);
    ++report.sweeps;
    if (r < best) {
      best = r;
      best_iterate = solution;
    }
    if (r <= options.tol) {
      report.converged = true;
      break;
    }
  }
  solution = std::move(best_iterate);
  report.residual = best;
  return report;
}

struct WeightedSample {
  Spectrum features;
  double weight = 1.0;
};

struct SolveResult {
  FilterLayerState state;
  SolverReport report;
};

/// Batch solve over explicitly weighted samples (weights >= 0, summing to 1).
inline SolveResult gauss_seidel_solve(std::span<const WeightedSample> samples, const Spectrum& label,
                                      const SpatialPenalty& penalty, double lambda_msk, std::size_t max_iters,
                                      double tol, const FilterLayerState& init, std::size_t max_coeffs = 21) {
  if (samples.empty()) throw InvalidArgument("gauss_seidel_solve: no samples");
  double total = 0.0;
  for (const auto& s : samples) {
    if (!(s.weight >= 0.0)) throw InvalidArgument("gauss_seidel_solve: sample weights must be >= 0");
    total += s.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw InvalidArgument("gauss_seidel_solve: sample weights must sum to 1");
  const auto& first = samples.front().features;
  NormalEquations ne(first.width(), first.height(), first.channels());
  for (const auto& s : samples) ne.add_sample(s.features, label, s.weight);
  const PenaltyKernel kernel = penalty_kernel(penalty, max_coeffs);

  SolveResult result;
  result.state = init;
  if (result.state.filter.empty()) {
    LayerSpec spec = init.layer;
    spec.width = first.width();
    spec.height = first.height();
    spec.channels = first.channels();
    result.state = FilterLayerState::empty(spec);
  }
  result.report = gauss_seidel(ne, kernel, lambda_msk, result.state.filter,
                               SolverOptions{max_iters, tol, 0.0});
  detail::make_hermitian(result.state.filter);
  result.state.numerator = ne.rhs();
  result.state.denominator = ne.energy();
  for (auto& v : result.state.denominator.storage()) v += lambda_msk * kernel.center;
  return result;
}

}  // namespace tacitdcf
