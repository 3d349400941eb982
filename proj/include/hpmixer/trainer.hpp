#pragma once

// Training / evaluation harness.
//
// Deterministic by construction: window shuffles, parameter init and dropout
// masks all derive from TrainSettings::seed through fixed key paths, batches
// are visited in shuffle order, and every reduction is sequential. Two runs
// with identical inputs and settings produce bit-identical histories,
// parameters and metrics.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "hpmixer/checkpoint.hpp"
#include "hpmixer/config_io.hpp"
#include "hpmixer/cycle.hpp"
#include "hpmixer/data.hpp"
#include "hpmixer/model.hpp"
#include "hpmixer/optim.hpp"
#include "hpmixer/tape.hpp"

namespace hpmixer {

namespace detail {
inline constexpr std::uint64_t kDropoutKey = 0x64726f70ull;  // dropout sub-stream
inline constexpr std::uint64_t kEpochKey = 0x65706f63ull;    // shuffle sub-stream
}  // namespace detail

/// Fills dataset-dependent config fields: channel count always; cycle length
/// via the train-split ACF when left at 0. `max_lag` 0 picks
/// min(200, train_rows/2 - 1).
inline ModelConfig resolve_config(ModelConfig cfg, const DatasetBundle& bundle,
                                  std::size_t max_lag = 0) {
  cfg.channels = bundle.channels;
  if (cfg.cycle_length == 0) {
    const std::size_t train_rows = bundle.bounds.train_end;
    if (max_lag == 0) {
      max_lag = std::min<std::size_t>(200, train_rows / 2 > 0 ? train_rows / 2 - 1 : 0);
    }
    std::vector<double> train(bundle.channels * train_rows);
    for (std::size_t c = 0; c < bundle.channels; ++c) {
      const double* src = bundle.channel(c);
      std::copy(src, src + train_rows, train.data() + c * train_rows);
    }
    const AcfProfile acf =
        estimate_cycle_length(train, bundle.channels, train_rows, max_lag);
    if (!acf.has_peak()) {
      throw ConfigError(
          "cycle_length: no dominant cycle in the train split (ACF has no "
          "usable peak); set cycle_length explicitly");
    }
    cfg.cycle_length = acf.peak_lag;
  }
  return cfg;
}

/// Forward-only metrics of a model over every window of a split.
template <typename T>
Metrics evaluate(const HpMixerModel<T>& model, const DatasetBundle& bundle,
                 Split split, std::size_t batch_size = 64) {
  const std::size_t L = model.config().lookback;
  const std::size_t H = model.config().horizon;
  const auto starts = window_starts(bundle, split, L, H);
  const RunContext ctx{/*training=*/false, /*seed=*/0};
  MetricAccumulator acc;
  for (std::size_t i = 0; i < starts.size(); i += batch_size) {
    const std::size_t n = std::min(batch_size, starts.size() - i);
    Batch<T> batch = make_batch<T>(bundle, starts.data() + i, n, L, H);
    Tensor<T> pred = model.forward(batch.inputs, batch.t_starts, ctx);
    acc.add(std::span<const T>(pred.values()),
            std::span<const T>(batch.targets.values()));
  }
  return acc.finish();
}

/// Repeat-last-value baseline: every horizon step predicts the final
/// lookback value of its channel.
inline Metrics naive_repeat_last(const DatasetBundle& bundle, Split split,
                                 std::size_t lookback, std::size_t horizon) {
  const auto starts = window_starts(bundle, split, lookback, horizon);
  MetricAccumulator acc;
  for (const std::int64_t s : starts) {
    for (std::size_t c = 0; c < bundle.channels; ++c) {
      const double* x = bundle.channel(c) + s;
      const double last = x[lookback - 1];
      for (std::size_t h = 0; h < horizon; ++h) {
        const double d = last - x[lookback + h];
        acc.sq_sum += d * d;
        acc.abs_sum += std::abs(d);
      }
    }
    acc.n += bundle.channels * horizon;
  }
  return acc.finish();
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  std::vector<double> step_losses;  // every optimisation step, in order
  std::size_t best_epoch = 0;       // 1-based epoch of the restored snapshot
  double best_val_mse = std::numeric_limits<double>::infinity();
  Metrics test;
  std::size_t parameter_count = 0;
  std::size_t trainable_parameter_count = 0;
  std::size_t steps = 0;
  double seconds = 0.0;
};

template <typename T>
struct TrainOutcome {
  HpMixerModel<T> model;
  TrainResult result;
};

/// Trains on the train split with per-epoch validation, early stopping and
/// best-epoch restore, then reports test metrics of the restored model.
/// `cfg` must already be resolved (channels and cycle_length set).
template <typename T>
TrainOutcome<T> train_model(const DatasetBundle& bundle, const ModelConfig& cfg,
                            const TrainSettings& settings,
                            std::ostream* log = nullptr) {
  settings.validate();
  cfg.validate(false);
  if (cfg.channels != bundle.channels) {
    throw ConfigError("channels: config says " + std::to_string(cfg.channels) +
                      " but the dataset has " + std::to_string(bundle.channels));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t L = cfg.lookback;
  const std::size_t H = cfg.horizon;

  HpMixerModel<T> model(cfg, settings.seed);
  Adam<T> optimizer(model.params(), static_cast<T>(settings.lr));
  const std::uint64_t dropout_seed = key_combine(settings.seed, detail::kDropoutKey);

  const auto base_starts = window_starts(bundle, Split::train, L, H);
  std::vector<std::int64_t> order(base_starts);

  TrainResult result;
  result.parameter_count = model.parameter_count();
  result.trainable_parameter_count = model.trainable_parameter_count();

  std::vector<std::vector<T>> best_snapshot;
  std::size_t since_best = 0;
  Tape<T> tape;

  for (std::size_t epoch = 1; epoch <= settings.epochs; ++epoch) {
    Rng shuffle_rng(key_combine(key_combine(settings.seed, detail::kEpochKey), epoch));
    order.assign(base_starts.begin(), base_starts.end());
    shuffle_rng.shuffle(order.begin(), order.end());

    std::size_t used = order.size();
    if (settings.max_steps_per_epoch != 0) {
      used = std::min(used, settings.max_steps_per_epoch * settings.batch_size);
    }

    double loss_sum = 0.0;
    std::size_t steps_this_epoch = 0;
    for (std::size_t i = 0; i < used; i += settings.batch_size) {
      const std::size_t n = std::min(settings.batch_size, used - i);
      Batch<T> batch = make_batch<T>(bundle, order.data() + i, n, L, H);

      model.params().zero_grads();
      typename Tape<T>::Scope scope(tape);
      const RunContext ctx{/*training=*/true, /*seed=*/dropout_seed};
      Tensor<T> pred = model.forward(batch.inputs, batch.t_starts, ctx);
      Tensor<T> loss = mse_loss(std::move(pred), batch.targets);
      const double loss_value = static_cast<double>(loss.values()[0]);
      if (!std::isfinite(loss_value)) {
        throw TrainingError("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch) + " step " +
                            std::to_string(steps_this_epoch + 1) + " (lr=" +
                            std::to_string(settings.lr) + ")");
      }
      tape.backward(loss);
      optimizer.update();

      loss_sum += loss_value;
      result.step_losses.push_back(loss_value);
      ++steps_this_epoch;
    }
    result.steps += steps_this_epoch;

    const double val_mse = evaluate(model, bundle, Split::val).mse;
    const double train_loss =
        steps_this_epoch > 0 ? loss_sum / static_cast<double>(steps_this_epoch) : 0.0;
    result.history.push_back(EpochStats{epoch, train_loss, val_mse});
    if (log) {
      (*log) << "epoch " << epoch << "/" << settings.epochs << " train_loss "
             << train_loss << " val_mse " << val_mse << '\n';
    }

    if (val_mse < result.best_val_mse) {
      result.best_val_mse = val_mse;
      result.best_epoch = epoch;
      best_snapshot = model.params().snapshot_values();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best > settings.patience) {
        if (log) {
          (*log) << "early stop after epoch " << epoch << " (best epoch "
                 << result.best_epoch << ")\n";
        }
        break;
      }
    }
  }

  if (!best_snapshot.empty()) model.params().restore_values(best_snapshot);
  result.test = evaluate(model, bundle, Split::test);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (log) {
    (*log) << "test mse " << result.test.mse << " mae " << result.test.mae
           << " (best epoch " << result.best_epoch << ", " << result.steps
           << " steps, " << result.seconds << "s)\n";
  }
  return TrainOutcome<T>{std::move(model), std::move(result)};
}

// ---------------------------------------------------------------------------
// Evaluation protocol: horizons x seeds grid with per-horizon means.
// ---------------------------------------------------------------------------

struct EvalRow {
  std::string dataset;
  std::string horizon;  // number, or "avg" for the final summary row
  std::string seed;     // number, or "mean" for aggregate rows
  double mse = 0.0;
  double mae = 0.0;
};

template <typename T>
std::vector<EvalRow> eval_protocol(const DatasetBundle& bundle, const ModelConfig& base,
                                   const TrainSettings& base_settings,
                                   const std::vector<std::size_t>& horizons,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::ostream* log = nullptr) {
  if (horizons.empty() || seeds.empty()) {
    throw ConfigError("eval protocol: need at least one horizon and one seed");
  }
  std::vector<EvalRow> rows;
  double mse_over_h = 0.0, mae_over_h = 0.0;
  for (const std::size_t h : horizons) {
    ModelConfig cfg = base;
    cfg.horizon = h;
    double mse_sum = 0.0, mae_sum = 0.0;
    for (const std::uint64_t seed : seeds) {
      TrainSettings settings = base_settings;
      settings.seed = seed;
      if (log) (*log) << "== horizon " << h << " seed " << seed << "\n";
      auto outcome = train_model<T>(bundle, cfg, settings, log);
      rows.push_back(EvalRow{bundle.name, std::to_string(h), std::to_string(seed),
                             outcome.result.test.mse, outcome.result.test.mae});
      mse_sum += outcome.result.test.mse;
      mae_sum += outcome.result.test.mae;
    }
    const double inv = 1.0 / static_cast<double>(seeds.size());
    rows.push_back(EvalRow{bundle.name, std::to_string(h), "mean", mse_sum * inv,
                           mae_sum * inv});
    mse_over_h += mse_sum * inv;
    mae_over_h += mae_sum * inv;
  }
  const double inv_h = 1.0 / static_cast<double>(horizons.size());
  rows.push_back(EvalRow{bundle.name, "avg", "mean", mse_over_h * inv_h,
                         mae_over_h * inv_h});
  return rows;
}

// ---------------------------------------------------------------------------
// Ablation runner
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& ablation_flag_names() {
  static const std::vector<std::string> names = {
      "no_cycle_mlp", "no_cycle_module", "freeze_swt",
      "no_swt",       "one_level_patching", "cycle_only"};
  return names;
}

inline void apply_ablation_flag(AblationFlags& flags, const std::string& name) {
  if (name == "no_cycle_mlp") flags.no_cycle_mlp = true;
  else if (name == "no_cycle_module") flags.no_cycle_module = true;
  else if (name == "freeze_swt") flags.freeze_swt = true;
  else if (name == "no_swt") flags.no_swt = true;
  else if (name == "one_level_patching") flags.one_level_patching = true;
  else if (name == "cycle_only") flags.cycle_only = true;
  else {
    std::string valid;
    for (const auto& n : ablation_flag_names()) {
      if (!valid.empty()) valid += ", ";
      valid += n;
    }
    throw ConfigError("ablation: unknown flag '" + name + "' (valid: " + valid + ")");
  }
}

struct AblationRow {
  std::string variant;  // "full" or the flag name
  double test_mse = 0.0;
  double test_mae = 0.0;
  std::size_t parameter_count = 0;
  std::size_t best_epoch = 0;
};

/// One row per requested variant, all from the same seed/settings. Each
/// entry is a single ablation flag name or "full" (no ablation); an empty
/// list defaults to just "full".
template <typename T>
std::vector<AblationRow> run_ablation(const DatasetBundle& bundle,
                                      const ModelConfig& base,
                                      const TrainSettings& settings,
                                      const std::vector<std::string>& flags,
                                      std::ostream* log = nullptr) {
  std::vector<AblationRow> rows;
  std::vector<std::string> variants = flags;
  if (variants.empty()) variants.push_back("full");
  for (const std::string& variant : variants) {
    ModelConfig cfg = base;
    if (variant != "full") {
      apply_ablation_flag(cfg.ablation, variant);
      cfg.validate(false);
    }
    if (log) (*log) << "== ablation variant: " << variant << "\n";
    auto outcome = train_model<T>(bundle, cfg, settings, log);
    rows.push_back(AblationRow{variant, outcome.result.test.mse,
                               outcome.result.test.mae,
                               outcome.result.parameter_count,
                               outcome.result.best_epoch});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Random hyperparameter search
// ---------------------------------------------------------------------------

/// One draw from the canonical search space. Invalid combinations are
/// rejected and redrawn (up to 1000 attempts).
inline std::pair<ModelConfig, double> sample_search_config(const ModelConfig& base,
                                                           Rng& rng) {
  static const std::size_t d_models[] = {32, 64, 128, 256, 512, 1024};
  static const std::size_t d_ffs[] = {32, 64, 128, 256, 512, 1024, 2048};
  static const double fc_drops[] = {0.0, 0.1, 0.2};

  std::vector<std::size_t> coarse_choices;
  for (const std::size_t p : patch_size_choices()) {
    if (base.lookback % p == 0) coarse_choices.push_back(p);
  }
  if (coarse_choices.empty()) {
    throw ConfigError("search: no canonical coarse patch size divides lookback " +
                      std::to_string(base.lookback));
  }

  std::string last_error;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ModelConfig cfg = base;
    const double lr = rng.log_uniform(1e-4, 1e-2);
    cfg.d_model = d_models[rng.uniform_int(6)];
    cfg.d_ff = d_ffs[rng.uniform_int(7)];
    cfg.dropout = rng.uniform(0.4, 0.9);
    cfg.fc_dropout = fc_drops[rng.uniform_int(3)];
    cfg.e_layers = 1 + rng.uniform_int(5);
    cfg.wavelet_levels = 1 + rng.uniform_int(5);
    cfg.patch_len_coarse = coarse_choices[rng.uniform_int(coarse_choices.size())];
    cfg.patch_len_fine = 0;
    try {
      cfg.validate(true);
      return {cfg, lr};
    } catch (const ConfigError& e) {
      last_error = e.what();
    }
  }
  throw ConfigError("search: no valid config in 1000 draws (last: " + last_error + ")");
}

struct SearchTrial {
  std::size_t index = 0;  // 1-based
  ModelConfig config;
  double lr = 0.0;
  double val_mse = std::numeric_limits<double>::infinity();
  double test_mse = std::numeric_limits<double>::infinity();
  double test_mae = std::numeric_limits<double>::infinity();
};

struct SearchOutcome {
  std::vector<SearchTrial> trials;
  std::size_t best_index = 0;  // 1-based, into trials; selected on val MSE
};

template <typename T>
SearchOutcome random_search(const DatasetBundle& bundle, const ModelConfig& base,
                            const TrainSettings& settings, std::size_t n_trials,
                            std::uint64_t search_seed, std::ostream* log = nullptr) {
  if (n_trials < 1) throw ConfigError("search: n_trials must be >= 1");
  Rng rng(key_combine(search_seed, 0x736561726368ull));
  SearchOutcome outcome;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= n_trials; ++i) {
    auto [cfg, lr] = sample_search_config(base, rng);
    TrainSettings trial_settings = settings;
    trial_settings.lr = lr;
    if (log) {
      (*log) << "== trial " << i << "/" << n_trials << " lr " << lr << " d_model "
             << cfg.d_model << " d_ff " << cfg.d_ff << " e_layers " << cfg.e_layers
             << " levels " << cfg.wavelet_levels << " patch " << cfg.patch_len_coarse
             << " dropout " << cfg.dropout << "\n";
    }
    auto trained = train_model<T>(bundle, cfg, trial_settings, log);
    SearchTrial trial;
    trial.index = i;
    trial.config = cfg;
    trial.lr = lr;
    trial.val_mse = trained.result.best_val_mse;
    trial.test_mse = trained.result.test.mse;
    trial.test_mae = trained.result.test.mae;
    outcome.trials.push_back(std::move(trial));
    if (outcome.trials.back().val_mse < best_val) {
      best_val = outcome.trials.back().val_mse;
      outcome.best_index = i;
    }
  }
  return outcome;
}

}  // namespace hpmixer
