#pragma once

// Learnable stationary (undecimated) wavelet transform.
//
// Analysis, level j (dilation d = 2^(j-1), circular, causal):
//   D_j = A_{j-1} (*) h1_j,   A_j = A_{j-1} (*) h0_j,   A_0 = x
// Synthesis walks back level by level with the ANTICAUSAL orientation
// (correlation), averaging the two branches:
//   A_{j-1} = 0.5 * (A_j (x) g0_j + D_j (x) g1_j)
// With g == h initialised from an orthonormal quadrature-mirror pair the
// causal/anticausal pairing gives exact perfect reconstruction:
//   sum_k h0[k] h0[k+m] + h1[k] h1[k+m] = 2 * delta[m]
// (no per-level shift compensation needed). All four filters per level are
// independent learnable tensors; training may break PR, which is the point.

#include <cstddef>
#include <string>
#include <vector>

#include "hpmixer/ops.hpp"
#include "hpmixer/params.hpp"

namespace hpmixer {

enum class BaseWavelet { haar, db2 };

inline const char* wavelet_name(BaseWavelet w) {
  return w == BaseWavelet::haar ? "haar" : "db2";
}

inline BaseWavelet wavelet_from_name(const std::string& name) {
  if (name == "haar") return BaseWavelet::haar;
  if (name == "db2") return BaseWavelet::db2;
  throw ConfigError("base_wavelet: unknown wavelet '" + name +
                    "' (supported: haar, db2)");
}

/// Filter length K of the orthonormal base pair.
inline std::size_t wavelet_filter_length(BaseWavelet w) {
  return w == BaseWavelet::haar ? 2 : 4;
}

/// Low-pass analysis taps h0 (h1 follows by the QMF rule
/// h1[k] = (-1)^k h0[K-1-k]).
inline std::vector<double> wavelet_lowpass(BaseWavelet w) {
  if (w == BaseWavelet::haar) {
    const double s = 0.70710678118654752440;  // 1/sqrt(2)
    return {s, s};
  }
  // Daubechies-2: ((1±sqrt(3)), (3±sqrt(3))) / (4 sqrt(2))
  const double r3 = 1.7320508075688772935;
  const double n = 1.0 / (4.0 * 1.4142135623730950488);
  return {(1.0 + r3) * n, (3.0 + r3) * n, (3.0 - r3) * n, (1.0 - r3) * n};
}

inline std::vector<double> wavelet_highpass(BaseWavelet w) {
  const auto h0 = wavelet_lowpass(w);
  const std::size_t K = h0.size();
  std::vector<double> h1(K);
  for (std::size_t k = 0; k < K; ++k) {
    h1[k] = (k % 2 == 0 ? 1.0 : -1.0) * h0[K - 1 - k];
  }
  return h1;
}

/// SWT output: [approx = A_J, details[j-1] = D_j for j = 1..J].
template <typename T>
struct WaveletCoeffs {
  Tensor<T> approx;
  std::vector<Tensor<T>> details;
  std::size_t levels() const { return details.size(); }
};

/// Learnable analysis/synthesis filter bank for a J-level SWT.
template <typename T>
class WaveletFilterBank {
 public:
  WaveletFilterBank() = default;

  WaveletFilterBank(ParamRegistry<T>& reg, const std::string& prefix,
                    BaseWavelet base, std::size_t levels, std::size_t signal_len,
                    bool per_level, bool trainable)
      : levels_(levels), per_level_(per_level), base_(base) {
    if (levels == 0) throw ConfigError("wavelet_levels: must be >= 1");
    const std::size_t K = wavelet_filter_length(base);
    const std::size_t support = (K - 1) * (std::size_t{1} << (levels - 1)) + 1;
    if (support > signal_len) {
      throw ConfigError(
          "wavelet_levels: dilated filter support " + std::to_string(support) +
          " at level " + std::to_string(levels) + " (K=" + std::to_string(K) +
          ") exceeds lookback " + std::to_string(signal_len));
    }
    const auto h0d = wavelet_lowpass(base);
    const auto h1d = wavelet_highpass(base);
    std::vector<T> h0(h0d.begin(), h0d.end());
    std::vector<T> h1(h1d.begin(), h1d.end());
    const std::size_t sets = per_level ? levels : 1;
    for (std::size_t s = 0; s < sets; ++s) {
      const std::string lp =
          prefix + (per_level ? ".l" + std::to_string(s + 1) : "");
      h0_.push_back(reg.add(lp + ".h0", Tensor<T>::from({K}, h0), trainable));
      h1_.push_back(reg.add(lp + ".h1", Tensor<T>::from({K}, h1), trainable));
      // Synthesis filters start as copies of the analysis pair (exact PR).
      g0_.push_back(reg.add(lp + ".g0", Tensor<T>::from({K}, h0), trainable));
      g1_.push_back(reg.add(lp + ".g1", Tensor<T>::from({K}, h1), trainable));
    }
  }

  std::size_t levels() const { return levels_; }
  BaseWavelet base() const { return base_; }

  Tensor<T> h0(std::size_t level) const { return h0_[per_level_ ? level - 1 : 0]; }
  Tensor<T> h1(std::size_t level) const { return h1_[per_level_ ? level - 1 : 0]; }
  Tensor<T> g0(std::size_t level) const { return g0_[per_level_ ? level - 1 : 0]; }
  Tensor<T> g1(std::size_t level) const { return g1_[per_level_ ? level - 1 : 0]; }

  /// Full analysis cascade over the last axis of x.
  WaveletCoeffs<T> swt(Tensor<T> x) const {
    WaveletCoeffs<T> out;
    out.details.reserve(levels_);
    Tensor<T> approx = std::move(x);
    for (std::size_t j = 1; j <= levels_; ++j) {
      const std::size_t dilation = std::size_t{1} << (j - 1);
      out.details.push_back(
          conv1d_circular(approx, h1(j), dilation, ConvOrient::causal));
      approx = conv1d_circular(approx, h0(j), dilation, ConvOrient::causal);
    }
    out.approx = std::move(approx);
    return out;
  }

  /// Full synthesis cascade; inverse of swt at initialisation.
  Tensor<T> iswt(const WaveletCoeffs<T>& coeffs) const {
    if (coeffs.levels() != levels_) {
      throw ShapeError("iswt: expected " + std::to_string(levels_) +
                       " detail bands, got " + std::to_string(coeffs.levels()));
    }
    Tensor<T> approx = coeffs.approx;
    for (std::size_t j = levels_; j >= 1; --j) {
      const std::size_t dilation = std::size_t{1} << (j - 1);
      Tensor<T> lo = conv1d_circular(approx, g0(j), dilation, ConvOrient::anticausal);
      Tensor<T> hi = conv1d_circular(coeffs.details[j - 1], g1(j), dilation,
                                     ConvOrient::anticausal);
      approx = scale(add(std::move(lo), std::move(hi)), T(0.5));
    }
    return approx;
  }

 private:
  std::size_t levels_ = 0;
  bool per_level_ = true;
  BaseWavelet base_ = BaseWavelet::db2;
  std::vector<Tensor<T>> h0_, h1_, g0_, g1_;
};

}  // namespace hpmixer
