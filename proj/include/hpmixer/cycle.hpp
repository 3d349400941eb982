#pragma once

// Cycle modelling: ACF-based cycle-length estimation and the learnable
// cycle bank with its channel-mixing refinement MLP.
//
// The bank Q is a (W, C) table of per-phase, per-channel values, zero at
// init. Windows carry their absolute dataset offset t, so a slice of length
// n starting at t reads rows (t+i) mod W — phases stay consistent across
// train/val/test and across the lookback/horizon boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hpmixer/nn.hpp"
#include "hpmixer/ops.hpp"
#include "hpmixer/params.hpp"

namespace hpmixer {

/// Result of autocorrelation-based cycle estimation.
struct AcfProfile {
  std::size_t lag_min = 4;
  std::vector<double> mean_acf;                  // index = lag, [0, max_lag]
  std::vector<std::vector<double>> channel_acf;  // per channel, same indexing
  std::vector<std::size_t> constant_channels;    // zero-variance channels
  std::size_t peak_lag = 0;                      // 0 => no usable peak
  bool has_peak() const { return peak_lag != 0; }
};

/// Per-channel biased sample ACF (guarantees |rho| <= 1), averaged over
/// channels; peak = argmax over lags [lag_min, max_lag], smallest lag wins
/// ties. `series` is row-major (C, T). Constant channels contribute zero ACF
/// and are reported. Requires max_lag < T/2 and lag_min >= 1.
inline AcfProfile estimate_cycle_length(const std::vector<double>& series,
                                        std::size_t channels, std::size_t rows,
                                        std::size_t max_lag,
                                        std::size_t lag_min = 4) {
  if (channels == 0 || rows == 0 || series.size() != channels * rows) {
    throw ConfigError("acf: series size does not match channels*rows");
  }
  if (max_lag >= (rows + 1) / 2) {
    throw ConfigError("acf: max_lag " + std::to_string(max_lag) +
                      " must be < T/2 with T=" + std::to_string(rows));
  }
  if (lag_min < 1 || lag_min > max_lag) {
    throw ConfigError("acf: need 1 <= lag_min <= max_lag");
  }
  AcfProfile out;
  out.lag_min = lag_min;
  out.mean_acf.assign(max_lag + 1, 0.0);
  out.channel_acf.assign(channels, std::vector<double>(max_lag + 1, 0.0));

  for (std::size_t c = 0; c < channels; ++c) {
    const double* x = series.data() + c * rows;
    double mean = 0.0;
    for (std::size_t t = 0; t < rows; ++t) mean += x[t];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t t = 0; t < rows; ++t) {
      const double d = x[t] - mean;
      var += d * d;
    }
    if (var == 0.0) {
      out.constant_channels.push_back(c);
      continue;  // ACF stays all-zero for this channel
    }
    auto& acf = out.channel_acf[c];
    acf[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
      double s = 0.0;
      for (std::size_t t = lag; t < rows; ++t) {
        s += (x[t] - mean) * (x[t - lag] - mean);
      }
      acf[lag] = s / var;  // biased estimator: denominator covers all T terms
    }
  }

  const std::size_t live = channels - out.constant_channels.size();
  if (live > 0) {
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) s += out.channel_acf[c][lag];
      out.mean_acf[lag] = s / static_cast<double>(channels);
    }
    double best = -2.0;
    for (std::size_t lag = lag_min; lag <= max_lag; ++lag) {
      if (out.mean_acf[lag] > best) {  // strict '>' => smallest lag wins ties
        best = out.mean_acf[lag];
        out.peak_lag = lag;
      }
    }
  }
  return out;
}

/// Learnable cycle bank plus channel-mixing refinement (MLP + LayerNorm over
/// the channel axis). `no_mlp` keeps the raw bank slice as the prediction.
template <typename T>
class CycleModule {
 public:
  CycleModule() = default;

  CycleModule(ParamRegistry<T>& reg, const std::string& prefix,
              std::size_t cycle_len, std::size_t channels, std::size_t d_cycle,
              bool no_mlp, Rng& rng, T fc_drop_rate, std::uint64_t& stream_counter)
      : cycle_len_(cycle_len), channels_(channels), no_mlp_(no_mlp) {
    bank_ = reg.add(prefix + ".bank", Tensor<T>(Shape{cycle_len, channels}));
    if (!no_mlp_) {
      fc1_ = Linear<T>(reg, prefix + ".fc1", channels, d_cycle, rng);
      fc2_ = Linear<T>(reg, prefix + ".fc2", d_cycle, channels, rng);
      ln_ = LayerNorm<T>(reg, prefix + ".ln", channels);
      drop_.rate = fc_drop_rate;
      drop_.stream_id = stream_counter++;
    }
  }

  std::size_t cycle_len() const { return cycle_len_; }
  Tensor<T> bank() const { return bank_; }

  /// Raw phase-aligned slice: (B, C, length) from starts (absolute offsets).
  Tensor<T> slice(const std::vector<std::int64_t>& t_starts,
                  std::size_t length) const {
    return cycle_gather(bank_, t_starts, length);
  }

  /// Channel-mixing refinement: LayerNorm(MLP(x)) across the channel axis at
  /// every time position. Identity when constructed with no_mlp.
  Tensor<T> refine(Tensor<T> x, const RunContext& ctx) const {
    if (no_mlp_) return x;
    // (B, C, n) -> (B, n, C): mix across channels per position.
    Tensor<T> t = permute(std::move(x), {0, 2, 1});
    t = fc2_.forward(drop_.forward(gelu(fc1_.forward(std::move(t))), ctx));
    t = ln_.forward(std::move(t));
    return permute(std::move(t), {0, 2, 1});
  }

 private:
  std::size_t cycle_len_ = 0;
  std::size_t channels_ = 0;
  bool no_mlp_ = false;
  Tensor<T> bank_;
  Linear<T> fc1_, fc2_;
  LayerNorm<T> ln_;
  DropoutSite<T> drop_;
};

}  // namespace hpmixer
