#pragma once

// Fourier substrate: 2D DFT over every channel of a tensor, multichannel
// circular correlation, and periodic Gaussian labels.
//
// Convention: the forward transform is unnormalized and the inverse carries
// the 1/(W*H) factor. Every Fourier-domain formula in the library assumes it.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "tacitdcf/error.hpp"
#include "tacitdcf/tensor.hpp"

namespace tacitdcf {

namespace detail {

using cplx = std::complex<double>;

/// FFTW plans keyed by (width, height, channels, direction). Planning is not
/// thread-safe in FFTW, so the cache is guarded; executing a plan on new
/// arrays is, so transforms themselves run unlocked.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t w, std::size_t h, std::size_t c, bool inverse) {
    const Key key{w, h, c, inverse};
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(w * h * c);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int dims[2] = {static_cast<int>(h), static_cast<int>(w)};
    const int stride = static_cast<int>(c);
    // Channels are interleaved: each channel is a strided 2D array, and
    // consecutive channels start one element apart.
    fftw_plan plan = fftw_plan_many_dft(2, dims, stride, buf, nullptr, stride, 1, buf, nullptr, stride, 1,
                                        inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericError("fftw: planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  using Key = std::tuple<std::size_t, std::size_t, std::size_t, bool>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

/// Unnormalized 2D transform of every channel, in place.
inline void transform2d(Spectrum& s, bool inverse) {
  if (s.size() == 0) return;
  fftw_plan plan = PlanCache::instance().get(s.width(), s.height(), s.channels(), inverse);
  auto* data = reinterpret_cast<fftw_complex*>(s.storage().data());
  fftw_execute_dft(plan, data, data);
}

/// Inverse transform keeping the complex result (1/(W*H) applied).
inline Spectrum inverse_complex(Spectrum s) {
  transform2d(s, true);
  const double scale = 1.0 / static_cast<double>(s.plane_size());
  for (auto& v : s.storage()) v *= scale;
  return s;
}

/// Inverse transform discarding the imaginary part without checking it.
inline FeatureTensor inverse_real_part(const Spectrum& s) {
  Spectrum tmp = inverse_complex(s);
  FeatureTensor out(s.width(), s.height(), s.channels());
  for (std::size_t i = 0; i < tmp.size(); ++i) out.storage()[i] = tmp.storage()[i].real();
  return out;
}

}  // namespace detail

/// Relative tolerance on the imaginary residue accepted by idft2.
inline constexpr double kRealResidueTolerance = 1e-9;

/// Per-channel 2D DFT (unnormalized).
inline Spectrum dft2(const FeatureTensor& tensor) {
  if (tensor.width() == 0 || tensor.height() == 0 || tensor.channels() == 0) {
    throw InvalidArgument("dft2: tensor has a zero dimension");
  }
  if (!all_finite(tensor)) throw InvalidArgument("dft2: tensor contains non-finite values");
  Spectrum s(tensor.width(), tensor.height(), tensor.channels());
  for (std::size_t i = 0; i < tensor.size(); ++i) s.storage()[i] = tensor.storage()[i];
  detail::transform2d(s, false);
  return s;
}

/// Inverse 2D DFT back to a real tensor. Throws NumericError when the spectrum
/// is not Hermitian (imaginary residue above kRealResidueTolerance relative).
inline FeatureTensor idft2(const Spectrum& spectrum) {
  if (spectrum.width() == 0 || spectrum.height() == 0 || spectrum.channels() == 0) {
    throw InvalidArgument("idft2: spectrum has a zero dimension");
  }
  Spectrum tmp = detail::inverse_complex(spectrum);
  double max_abs = 0.0;
  double max_imag = 0.0;
  FeatureTensor out(spectrum.width(), spectrum.height(), spectrum.channels());
  for (std::size_t i = 0; i < tmp.size(); ++i) {
    const auto v = tmp.storage()[i];
    max_abs = std::max(max_abs, std::abs(v));
    max_imag = std::max(max_imag, std::abs(v.imag()));
    out.storage()[i] = v.real();
  }
  if (max_imag > kRealResidueTolerance * std::max(max_abs, 1e-300)) {
    throw NumericError("idft2: spectrum is not Hermitian (imaginary residue " +
                       std::to_string(max_imag / std::max(max_abs, 1e-300)) + " relative)");
  }
  return out;
}

/// Response of a multichannel filter: F^-1{ sum_k conj(F^k) . X^k }.
/// Spatially, out(t) = sum_k sum_p f^k(p) x^k(p + t) with periodic wrap.
inline ResponseMap circular_correlate(const Spectrum& filter, const Spectrum& features) {
  if (!filter.same_shape(features)) {
    throw InvalidArgument("circular_correlate: filter and features differ in shape");
  }
  const std::size_t n = filter.plane_size();
  const std::size_t c = filter.channels();
  Spectrum acc(filter.width(), filter.height(), 1);
  const auto& f = filter.storage();
  const auto& x = features.storage();
  auto& a = acc.storage();
  for (std::size_t i = 0; i < n; ++i) {
    std::complex<double> s(0.0, 0.0);
    for (std::size_t k = 0; k < c; ++k) s += std::conj(f[i * c + k]) * x[i * c + k];
    a[i] = s;
  }
  return detail::inverse_real_part(acc);
}

struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Gaussian of width `sigma` peaked (value exactly 1) at `peak`, using
/// periodic distance so the label wraps the same way correlation does.
inline FeatureTensor gaussian_label(std::size_t width, std::size_t height, double sigma, GridPoint peak) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_label: sigma must be positive");
  if (width == 0 || height == 0) throw InvalidArgument("gaussian_label: empty grid");
  if (peak.x < 0.0 || peak.y < 0.0 || peak.x >= static_cast<double>(width) ||
      peak.y >= static_cast<double>(height)) {
    throw InvalidArgument("gaussian_label: peak outside grid");
  }
  auto wrapped = [](double d, double n) {
    d = std::fabs(d);
    d = std::fmod(d, n);
    return std::min(d, n - d);
  };
  FeatureTensor out(width, height, 1);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t y = 0; y < height; ++y) {
    const double dy = wrapped(static_cast<double>(y) - peak.y, static_cast<double>(height));
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = wrapped(static_cast<double>(x) - peak.x, static_cast<double>(width));
      out(y, x) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return out;
}

}  // namespace tacitdcf
