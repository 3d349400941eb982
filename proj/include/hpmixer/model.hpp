#pragma once

// HPMixer model: instance normalisation, cycle removal, stationary wavelet
// decomposition, per-band hierarchical patch mixing with a channel-mixing
// attention encoder, wavelet reconstruction, prediction head, cycle re-add.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hpmixer/cycle.hpp"
#include "hpmixer/nn.hpp"
#include "hpmixer/ops.hpp"
#include "hpmixer/optim.hpp"
#include "hpmixer/params.hpp"
#include "hpmixer/patching.hpp"
#include "hpmixer/wavelet.hpp"

namespace hpmixer {

/// Ablation switches (all default off = full model). `cycle_only` is an
/// internal baseline: the entire residual branch is dropped and the forecast
/// is the refined cycle component alone.
struct AblationFlags {
  bool no_cycle_mlp = false;
  bool no_cycle_module = false;
  bool freeze_swt = false;
  bool no_swt = false;
  bool one_level_patching = false;
  bool cycle_only = false;
};

struct ModelConfig {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t channels = 0;      // filled from the dataset
  std::size_t cycle_length = 0;  // 0 => estimate via ACF before building
  std::size_t wavelet_levels = 1;
  BaseWavelet base_wavelet = BaseWavelet::db2;
  bool per_level_filters = true;
  std::size_t patch_len_coarse = 24;
  std::size_t patch_len_fine = 0;  // 0 => coarse/2 when even, else coarse
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::size_t n_heads = 4;
  std::size_t e_layers = 1;
  std::size_t d_cycle = 0;  // refinement MLP hidden width; 0 => 4 * channels
  double dropout = 0.4;
  double fc_dropout = 0.1;
  bool instance_norm = true;
  bool shared_encoder = true;
  bool refine_lookback_cycle = false;
  AblationFlags ablation;

  std::size_t resolved_patch_fine() const {
    if (ablation.one_level_patching) return patch_len_coarse;
    if (patch_len_fine != 0) return patch_len_fine;
    return patch_len_coarse % 2 == 0 ? patch_len_coarse / 2 : patch_len_coarse;
  }

  std::size_t resolved_d_cycle() const { return d_cycle != 0 ? d_cycle : 4 * channels; }

  /// Bands entering the mixer stacks: J details + 1 approx (1 without SWT).
  std::size_t band_count() const {
    return ablation.no_swt ? 1 : wavelet_levels + 1;
  }

  /// Structural validation (always required). With `strict`, additionally
  /// enforces the canonical hyperparameter search-space memberships used on
  /// the CLI / random-search path.
  void validate(bool strict = false) const {
    if (channels < 1) throw ConfigError("channels: must be >= 1");
    if (lookback < 2) throw ConfigError("lookback: must be >= 2");
    if (horizon < 1) throw ConfigError("horizon: must be >= 1");
    if (cycle_length < 1) {
      throw ConfigError("cycle_length: unresolved (run ACF estimation or set it)");
    }
    if (d_model < 1 || d_ff < 1) throw ConfigError("d_model/d_ff: must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0) {
      throw ConfigError("n_heads: d_model " + std::to_string(d_model) +
                        " must be divisible by n_heads " + std::to_string(n_heads));
    }
    if (e_layers < 1) throw ConfigError("e_layers: must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw ConfigError("dropout: must lie in [0, 1)");
    }
    if (!(fc_dropout >= 0.0 && fc_dropout < 1.0)) {
      throw ConfigError("fc_dropout: must lie in [0, 1)");
    }
    if (ablation.cycle_only && ablation.no_cycle_module) {
      throw ConfigError("ablation: cycle_only and no_cycle_module are exclusive");
    }
    // Patch divisibility (throws with valid-choice hints).
    make_patch_spec(lookback, patch_len_coarse, resolved_patch_fine());
    if (!ablation.no_swt && !ablation.cycle_only) {
      const std::size_t K = wavelet_filter_length(base_wavelet);
      if (wavelet_levels < 1) throw ConfigError("wavelet_levels: must be >= 1");
      const std::size_t support =
          (K - 1) * (std::size_t{1} << (wavelet_levels - 1)) + 1;
      if (support > lookback) {
        throw ConfigError("wavelet_levels: J=" + std::to_string(wavelet_levels) +
                          " with K=" + std::to_string(K) + " needs support " +
                          std::to_string(support) + " > lookback " +
                          std::to_string(lookback));
      }
    }
    if (strict) {
      auto in_set = [](std::size_t v, std::initializer_list<std::size_t> set) {
        return std::find(set.begin(), set.end(), v) != set.end();
      };
      if (!in_set(d_model, {32, 64, 128, 256, 512, 1024})) {
        throw ConfigError("d_model: " + std::to_string(d_model) +
                          " not in {32, 64, 128, 256, 512, 1024}");
      }
      if (!in_set(d_ff, {32, 64, 128, 256, 512, 1024, 2048})) {
        throw ConfigError("d_ff: " + std::to_string(d_ff) +
                          " not in {32, 64, 128, 256, 512, 1024, 2048}");
      }
      if (!(dropout >= 0.4 && dropout <= 0.9)) {
        throw ConfigError("dropout: must lie in [0.4, 0.9]");
      }
      const bool fc_ok = std::abs(fc_dropout) < 1e-9 ||
                         std::abs(fc_dropout - 0.1) < 1e-9 ||
                         std::abs(fc_dropout - 0.2) < 1e-9;
      if (!fc_ok) throw ConfigError("fc_dropout: must be one of {0, 0.1, 0.2}");
      if (e_layers > 5) throw ConfigError("e_layers: must lie in [1, 5]");
      if (wavelet_levels > 5) throw ConfigError("wavelet_levels: must lie in [1, 5]");
      const auto& sizes = patch_size_choices();
      if (std::find(sizes.begin(), sizes.end(), patch_len_coarse) == sizes.end()) {
        throw ConfigError("patch_len_coarse: " + std::to_string(patch_len_coarse) +
                          " not in {4, 8, 12, 16, 24, 32, 48}");
      }
    }
  }
};

/// Decomposition of one lookback window in model space (after optional
/// instance normalisation): original == cycle + residual, bitwise.
template <typename T>
struct WindowDecomposition {
  Tensor<T> original;  // (B, C, L)
  Tensor<T> cycle;     // (B, C, L)
  Tensor<T> residual;  // (B, C, L)
};

template <typename T>
class HpMixerModel {
 public:
  HpMixerModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
    cfg_.validate(false);
    patch_ = make_patch_spec(cfg_.lookback, cfg_.patch_len_coarse,
                             cfg_.resolved_patch_fine());
    Rng rng(key_combine(seed_, 0x6d6f64656cull));  // parameter-init stream
    std::uint64_t streams = 1;                     // dropout stream ids

    if (!cfg_.ablation.no_cycle_module) {
      cycle_ = std::make_unique<CycleModule<T>>(
          params_, "cycle", cfg_.cycle_length, cfg_.channels,
          cfg_.resolved_d_cycle(), cfg_.ablation.no_cycle_mlp, rng,
          static_cast<T>(cfg_.fc_dropout), streams);
    }
    if (!cfg_.ablation.cycle_only) {
      if (!cfg_.ablation.no_swt) {
        swt_ = std::make_unique<WaveletFilterBank<T>>(
            params_, "swt", cfg_.base_wavelet, cfg_.wavelet_levels, cfg_.lookback,
            cfg_.per_level_filters, /*trainable=*/!cfg_.ablation.freeze_swt);
      }
      const std::size_t bands = cfg_.band_count();
      const std::size_t encoders = cfg_.shared_encoder ? 1 : bands;
      for (std::size_t e = 0; e < encoders; ++e) {
        const std::string prefix =
            cfg_.shared_encoder ? "enc" : "enc.b" + std::to_string(e);
        encoders_.emplace_back(params_, prefix, cfg_.patch_len_coarse, cfg_.d_model,
                               cfg_.d_ff, cfg_.n_heads, cfg_.e_layers, rng,
                               static_cast<T>(cfg_.dropout), streams);
      }
      for (std::size_t b = 0; b < bands; ++b) {
        const std::string prefix = "mix.b" + std::to_string(b);
        BandMixer m;
        m.fine = Mlp<T>(params_, prefix + ".fine", patch_.n_fine, cfg_.d_ff,
                        patch_.n_fine, rng, static_cast<T>(cfg_.fc_dropout), streams++);
        m.flat = Mlp<T>(params_, prefix + ".flat", cfg_.lookback, cfg_.d_ff,
                        cfg_.lookback, rng, static_cast<T>(cfg_.fc_dropout), streams++);
        m.patch = Mlp<T>(params_, prefix + ".patch", cfg_.patch_len_coarse, cfg_.d_ff,
                         cfg_.patch_len_coarse, rng, static_cast<T>(cfg_.fc_dropout),
                         streams++);
        mixers_.push_back(std::move(m));
      }
      head_mlp_ = Mlp<T>(params_, "head.res", cfg_.lookback, cfg_.d_ff, cfg_.lookback,
                         rng, static_cast<T>(cfg_.fc_dropout), streams++);
      head_out_ = Linear<T>(params_, "head.out", cfg_.lookback, cfg_.horizon, rng);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  ParamRegistry<T>& params() { return params_; }
  const ParamRegistry<T>& params() const { return params_; }
  std::size_t parameter_count() const { return params_.parameter_count(); }
  std::size_t trainable_parameter_count() const {
    return params_.trainable_parameter_count();
  }
  const PatchSpec& patch_spec() const { return patch_; }
  const WaveletFilterBank<T>* wavelet() const { return swt_.get(); }
  const CycleModule<T>* cycle() const { return cycle_.get(); }

  /// Forecast (B, C, H) from lookback windows (B, C, L) whose absolute start
  /// offsets are `t_starts` (cycle phase anchoring).
  Tensor<T> forward(Tensor<T> x, const std::vector<std::int64_t>& t_starts,
                    const RunContext& ctx) const {
    check_input(x, t_starts);
    const std::size_t L = cfg_.lookback;
    const std::size_t H = cfg_.horizon;

    // Instance normalisation (per window, per channel) inside the graph.
    Tensor<T> h = x;
    Tensor<T> mu, sigma;
    if (cfg_.instance_norm) {
      mu = mean_lastdim(h);
      Tensor<T> centered = sub_lastdim(h, mu);
      sigma = sqrt_shifted(mean_lastdim(mul(centered, centered)), T(1e-5));
      h = div_lastdim(std::move(centered), sigma);
    }

    // Cycle removal + future cycle forecast.
    Tensor<T> resid = h;
    Tensor<T> y_period;
    if (cycle_) {
      Tensor<T> q_look = cycle_->slice(t_starts, L);
      if (cfg_.refine_lookback_cycle) q_look = cycle_->refine(std::move(q_look), ctx);
      resid = sub(h, std::move(q_look));
      std::vector<std::int64_t> fut(t_starts);
      for (auto& t : fut) t += static_cast<std::int64_t>(L);
      y_period = cycle_->refine(cycle_->slice(fut, H), ctx);
    }

    if (cfg_.ablation.cycle_only) {
      Tensor<T> y = std::move(y_period);
      if (cfg_.instance_norm) y = add_lastdim(mul_lastdim(std::move(y), sigma), mu);
      return y;
    }

    // Per-band hierarchical mixing on the cycle-free residual.
    std::vector<Tensor<T>> bands;
    if (swt_) {
      WaveletCoeffs<T> coeffs = swt_->swt(resid);
      bands.push_back(std::move(coeffs.approx));
      for (auto& d : coeffs.details) bands.push_back(std::move(d));
    } else {
      bands.push_back(resid);
    }
    std::vector<Tensor<T>> mixed;
    mixed.reserve(bands.size());
    for (std::size_t b = 0; b < bands.size(); ++b) {
      mixed.push_back(mix_band(std::move(bands[b]), b, ctx));
    }
    Tensor<T> recon;
    if (swt_) {
      WaveletCoeffs<T> coeffs;
      coeffs.approx = std::move(mixed[0]);
      coeffs.details.assign(mixed.begin() + 1, mixed.end());
      recon = swt_->iswt(coeffs);
    } else {
      recon = std::move(mixed[0]);
    }

    // Prediction head: residual MLP over L, then shared linear L -> H.
    Tensor<T> hres = add(head_mlp_.forward(recon, ctx), recon);
    Tensor<T> y = head_out_.forward(std::move(hres));
    if (cycle_) y = add(std::move(y), std::move(y_period));
    if (cfg_.instance_norm) y = add_lastdim(mul_lastdim(std::move(y), sigma), mu);
    return y;
  }

  /// Model-space decomposition of the lookback (eval semantics, no tape
  /// needed): original is the (optionally instance-normalised) input, cycle
  /// is the raw bank slice, residual = original - cycle (bitwise).
  WindowDecomposition<T> decompose(Tensor<T> x,
                                   const std::vector<std::int64_t>& t_starts) const {
    check_input(x, t_starts);
    WindowDecomposition<T> out;
    Tensor<T> h = x;
    if (cfg_.instance_norm) {
      Tensor<T> mu = mean_lastdim(h);
      Tensor<T> centered = sub_lastdim(h, mu);
      Tensor<T> sigma = sqrt_shifted(mean_lastdim(mul(centered, centered)), T(1e-5));
      h = div_lastdim(std::move(centered), sigma);
    }
    out.original = h;
    out.cycle = cycle_ ? cycle_->slice(t_starts, cfg_.lookback)
                       : Tensor<T>(h.shape());
    out.residual = sub(h, out.cycle);
    return out;
  }

 private:
  struct BandMixer {
    Mlp<T> fine, flat, patch;
  };

  void check_input(const Tensor<T>& x, const std::vector<std::int64_t>& t_starts) const {
    if (x.rank() != 3 || x.dim(1) != cfg_.channels || x.dim(2) != cfg_.lookback) {
      throw ShapeError("forward: expected (B, " + std::to_string(cfg_.channels) +
                       ", " + std::to_string(cfg_.lookback) + "), got " +
                       shape_str(x.shape()));
    }
    if (t_starts.size() != x.dim(0)) {
      throw ShapeError("forward: batch " + std::to_string(x.dim(0)) + " but " +
                       std::to_string(t_starts.size()) + " start offsets");
    }
  }

  /// Coarse patches -> channel encoder -> fine mixer -> coarse mixer -> band.
  Tensor<T> mix_band(Tensor<T> band, std::size_t index, const RunContext& ctx) const {
    const Shape band_shape = band.shape();  // (B, C, L)
    Tensor<T> z = patch_coarse(std::move(band), patch_);
    const std::size_t enc = cfg_.shared_encoder ? 0 : index;
    z = encoders_[enc].forward(std::move(z), ctx);

    // Fine mixing along the N_fi axis (per fine-patch position).
    Tensor<T> zf = patch_fine(std::move(z), patch_);
    Tensor<T> zt = transpose_last(zf);  // (..., P_fi, N_fi)
    zt = add(mixers_[index].fine.forward(zt, ctx), zt);
    zf = transpose_last(std::move(zt));

    // Coarse mixing: whole-length view, then per-patch view.
    Tensor<T> flat = reshape(std::move(zf), band_shape);  // (B, C, L)
    flat = add(mixers_[index].flat.forward(flat, ctx), flat);
    Tensor<T> zp = patch_coarse(std::move(flat), patch_);
    zp = add(mixers_[index].patch.forward(zp, ctx), zp);
    return unpatch_coarse(std::move(zp), patch_);
  }

  ModelConfig cfg_;
  std::uint64_t seed_ = 0;
  ParamRegistry<T> params_;
  PatchSpec patch_;
  std::unique_ptr<CycleModule<T>> cycle_;
  std::unique_ptr<WaveletFilterBank<T>> swt_;
  std::vector<ChannelMixingEncoder<T>> encoders_;
  std::vector<BandMixer> mixers_;
  Mlp<T> head_mlp_;
  Linear<T> head_out_;
};

}  // namespace hpmixer
