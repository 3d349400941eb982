// hpmixer command-line tool.
//
// Subcommands: acf, train, eval, protocol, ablate, search, decompose, synth.
// Every command is deterministic given identical inputs and seeds; all file
// outputs are byte-stable (no timestamps or wall-clock values in files).
// Errors print a single machine-parsable line to stderr and exit nonzero.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <hpmixer/hpmixer.hpp>

namespace {

using namespace hpmixer;

// Training runs in 32-bit (fast, deterministic); analysis paths that promise
// exact text round trips (acf, decompose) run in 64-bit.
using Real = float;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) {
    std::filesystem::create_directories(dir);
  }
  std::ofstream out(path);
  if (!out) throw DataError("output: cannot write '" + path + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Shared dataset / config plumbing
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string config_path;
  std::string data_path;
  std::string dataset_name;
  bool quiet = false;
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", o.config_path, "JSON run config file");
  }
  cmd->add_option("--data", o.data_path, "dataset CSV path");
  cmd->add_option("--dataset", o.dataset_name,
                  "registry name (etth1, etth2, ettm1, ettm2, weather, ecl, traffic); "
                  "enables protocol shape checks and HPMIXER_DATA_DIR lookup");
  cmd->add_flag("--quiet", o.quiet, "suppress progress logging");
}

RunConfig assemble_run_config(const CommonOpts& o) {
  RunConfig rc;
  if (!o.config_path.empty()) rc = load_run_config(o.config_path);
  if (!o.dataset_name.empty()) rc.dataset_name = o.dataset_name;
  if (!o.data_path.empty()) rc.dataset_path = o.data_path;
  return rc;
}

DatasetBundle load_bundle(const RunConfig& rc) {
  std::string path = rc.dataset_path;
  if (path.empty()) {
    if (rc.dataset_name.empty()) {
      throw ConfigError("dataset: provide --data, --dataset, or a config file");
    }
    const char* root = std::getenv("HPMIXER_DATA_DIR");
    if (!root || !*root) {
      throw ConfigError("dataset: no --data path and HPMIXER_DATA_DIR is unset");
    }
    path = std::string(root) + "/" + rc.dataset_name + ".csv";
  }
  return load_dataset(path, rc.dataset_name);
}

void write_metrics_csv(const std::string& path, const std::vector<EvalRow>& rows) {
  auto out = open_output(path);
  out << "dataset,horizon,seed,mse,mae\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.horizon << ',' << r.seed << ','
        << format_metric(r.mse) << ',' << format_metric(r.mae) << '\n';
  }
}

std::ostream* log_stream(const CommonOpts& o) {
  return o.quiet ? nullptr : &std::cerr;
}

// ---------------------------------------------------------------------------
// acf
// ---------------------------------------------------------------------------

int cmd_acf(const CommonOpts& common, std::size_t max_lag, std::size_t lag_min,
            const std::string& out_csv) {
  const RunConfig rc = assemble_run_config(common);
  const DatasetBundle bundle = load_bundle(rc);
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
      estimate_cycle_length(train, bundle.channels, train_rows, max_lag, lag_min);

  if (!out_csv.empty()) {
    auto out = open_output(out_csv);
    out << "lag,mean";
    for (std::size_t c = 0; c < bundle.channels; ++c) out << ",c" << c;
    out << '\n';
    for (std::size_t lag = 0; lag < acf.mean_acf.size(); ++lag) {
      out << lag << ',' << format_metric(acf.mean_acf[lag]);
      for (std::size_t c = 0; c < bundle.channels; ++c) {
        out << ',' << format_metric(acf.channel_acf[c][lag]);
      }
      out << '\n';
    }
  }
  for (const std::size_t c : acf.constant_channels) {
    std::cerr << "warning: channel " << c << " is constant on the train split\n";
  }
  if (!acf.has_peak()) {
    std::cerr << "warning: no usable ACF peak in lags [" << lag_min << ", "
              << max_lag << "]\n";
  }
  std::cout << acf.peak_lag << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainFlags {
  std::optional<std::size_t> lookback, horizon, epochs, batch_size, patience,
      max_steps, cycle_length;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  bool no_strict = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--lookback", f.lookback, "lookback window length L");
  cmd->add_option("--horizon", f.horizon, "forecast horizon H");
  cmd->add_option("--epochs", f.epochs, "maximum training epochs");
  cmd->add_option("--batch-size", f.batch_size, "windows per optimisation step");
  cmd->add_option("--patience", f.patience, "early-stop patience (epochs)");
  cmd->add_option("--max-steps", f.max_steps,
                  "cap optimisation steps per epoch (0 = every window)");
  cmd->add_option("--cycle-len", f.cycle_length,
                  "cycle length W (0 = estimate from the train-split ACF)");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--seed", f.seed, "run seed (init, shuffling, dropout)");
  cmd->add_flag("--no-strict", f.no_strict,
                "skip canonical search-space membership checks");
}

void apply_train_flags(RunConfig& rc, const TrainFlags& f) {
  if (f.lookback) rc.model.lookback = *f.lookback;
  if (f.horizon) rc.model.horizon = *f.horizon;
  if (f.cycle_length) rc.model.cycle_length = *f.cycle_length;
  if (f.epochs) rc.train.epochs = *f.epochs;
  if (f.batch_size) rc.train.batch_size = *f.batch_size;
  if (f.patience) rc.train.patience = *f.patience;
  if (f.max_steps) rc.train.max_steps_per_epoch = *f.max_steps;
  if (f.lr) rc.train.lr = *f.lr;
  if (f.seed) rc.train.seed = *f.seed;
}

int cmd_train(const CommonOpts& common, const TrainFlags& flags,
              const std::string& out_dir) {
  RunConfig rc = assemble_run_config(common);
  apply_train_flags(rc, flags);
  const DatasetBundle bundle = load_bundle(rc);
  rc.model = resolve_config(rc.model, bundle);
  rc.model.validate(!flags.no_strict);
  rc.train.validate();

  auto outcome = train_model<Real>(bundle, rc.model, rc.train, log_stream(common));

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(outcome.model, out_dir + "/model.ckpt");
    write_metrics_csv(out_dir + "/metrics.csv",
                      {EvalRow{bundle.name, std::to_string(rc.model.horizon),
                               std::to_string(rc.train.seed), outcome.result.test.mse,
                               outcome.result.test.mae}});
    {
      auto out = open_output(out_dir + "/history.csv");
      out << "epoch,train_loss,val_mse\n";
      for (const auto& e : outcome.result.history) {
        out << e.epoch << ',' << format_metric(e.train_loss) << ','
            << format_metric(e.val_mse) << '\n';
      }
    }
    {
      auto out = open_output(out_dir + "/config.json");
      out << to_json(rc).dump(2) << '\n';
    }
  }
  std::cout << "test mse " << format_metric(outcome.result.test.mse) << " mae "
            << format_metric(outcome.result.test.mae) << " (best epoch "
            << outcome.result.best_epoch << ", params "
            << outcome.result.parameter_count << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("split: '" + name + "' is not one of train/val/test");
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint,
             const std::string& split_name_str, std::size_t horizon,
             const std::string& out_csv) {
  const RunConfig rc = assemble_run_config(common);
  const DatasetBundle bundle = load_bundle(rc);
  HpMixerModel<Real> model = load_checkpoint<Real>(checkpoint);
  if (horizon != 0 && horizon != model.config().horizon) {
    throw ConfigError("horizon: checkpoint was trained for horizon " +
                      std::to_string(model.config().horizon) + ", not " +
                      std::to_string(horizon));
  }
  if (model.config().channels != bundle.channels) {
    throw ConfigError("channels: checkpoint expects " +
                      std::to_string(model.config().channels) +
                      " channels but the dataset has " +
                      std::to_string(bundle.channels));
  }
  const Split split = parse_split(split_name_str);
  const Metrics m = evaluate(model, bundle, split);
  if (!out_csv.empty()) {
    write_metrics_csv(out_csv,
                      {EvalRow{bundle.name, std::to_string(model.config().horizon),
                               std::to_string(model.seed()), m.mse, m.mae}});
  }
  std::cout << split_name_str << " mse " << format_metric(m.mse) << " mae "
            << format_metric(m.mae) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// protocol (horizons x seeds grid)
// ---------------------------------------------------------------------------

int cmd_protocol(const CommonOpts& common, const TrainFlags& flags,
                 std::vector<std::size_t> horizons, std::vector<std::uint64_t> seeds,
                 const std::string& out_csv) {
  RunConfig rc = assemble_run_config(common);
  apply_train_flags(rc, flags);
  if (horizons.empty()) horizons = {96, 192, 336, 720};
  if (seeds.empty()) seeds = {rc.train.seed};
  const DatasetBundle bundle = load_bundle(rc);
  rc.model = resolve_config(rc.model, bundle);
  rc.model.validate(!flags.no_strict);

  const auto rows =
      eval_protocol<Real>(bundle, rc.model, rc.train, horizons, seeds,
                          log_stream(common));
  if (!out_csv.empty()) write_metrics_csv(out_csv, rows);
  for (const auto& r : rows) {
    std::cout << r.dataset << ',' << r.horizon << ',' << r.seed << ','
              << format_metric(r.mse) << ',' << format_metric(r.mae) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

int cmd_ablate(const CommonOpts& common, const TrainFlags& flags,
               const std::vector<std::string>& ablation_flags,
               const std::string& out_csv) {
  RunConfig rc = assemble_run_config(common);
  apply_train_flags(rc, flags);
  const DatasetBundle bundle = load_bundle(rc);
  rc.model = resolve_config(rc.model, bundle);
  rc.model.validate(!flags.no_strict);

  const auto rows = run_ablation<Real>(bundle, rc.model, rc.train, ablation_flags,
                                       log_stream(common));
  std::string text = "variant,mse,mae,parameter_count,best_epoch\n";
  for (const auto& r : rows) {
    text += r.variant + ',' + format_metric(r.test_mse) + ',' +
            format_metric(r.test_mae) + ',' + std::to_string(r.parameter_count) +
            ',' + std::to_string(r.best_epoch) + '\n';
  }
  if (!out_csv.empty()) open_output(out_csv) << text;
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

int cmd_search(const CommonOpts& common, const TrainFlags& flags,
               std::size_t trials, std::uint64_t search_seed,
               const std::string& out_csv) {
  RunConfig rc = assemble_run_config(common);
  apply_train_flags(rc, flags);
  const DatasetBundle bundle = load_bundle(rc);
  rc.model = resolve_config(rc.model, bundle);

  const SearchOutcome outcome = random_search<Real>(
      bundle, rc.model, rc.train, trials, search_seed, log_stream(common));
  std::string text =
      "trial,lr,d_model,d_ff,e_layers,wavelet_levels,patch_len_coarse,dropout,"
      "fc_dropout,val_mse,test_mse,test_mae\n";
  for (const auto& t : outcome.trials) {
    text += std::to_string(t.index) + ',' + format_metric(t.lr) + ',' +
            std::to_string(t.config.d_model) + ',' + std::to_string(t.config.d_ff) +
            ',' + std::to_string(t.config.e_layers) + ',' +
            std::to_string(t.config.wavelet_levels) + ',' +
            std::to_string(t.config.patch_len_coarse) + ',' +
            format_metric(t.config.dropout) + ',' +
            format_metric(t.config.fc_dropout) + ',' + format_metric(t.val_mse) +
            ',' + format_metric(t.test_mse) + ',' + format_metric(t.test_mae) + '\n';
  }
  if (!out_csv.empty()) open_output(out_csv) << text;
  std::cout << text;
  std::cout << "best trial " << outcome.best_index << " (val mse "
            << format_metric(outcome.trials[outcome.best_index - 1].val_mse) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

// Emits the lookback-window decomposition as three aligned CSVs
// (<prefix>_original.csv, _cycle.csv, _residual.csv; channels as columns).
// Components are computed in 64-bit from the checkpoint's parameters, the
// residual is rounded once (h - q), and the original column is emitted as
// the rounded sum q + r, so re-adding the parsed cycle and residual values
// reproduces the original column bit-for-bit on every row.
int cmd_decompose(const CommonOpts& common, const std::string& checkpoint,
                  const std::string& split_name_str, std::size_t window_index,
                  const std::string& out_prefix) {
  const RunConfig rc = assemble_run_config(common);
  const DatasetBundle bundle = load_bundle(rc);
  HpMixerModel<Real> model = load_checkpoint<Real>(checkpoint);
  const ModelConfig& cfg = model.config();
  if (cfg.channels != bundle.channels) {
    throw ConfigError("channels: checkpoint expects " +
                      std::to_string(cfg.channels) + " channels but the dataset has " +
                      std::to_string(bundle.channels));
  }
  const Split split = parse_split(split_name_str);
  const auto starts = window_starts(bundle, split, cfg.lookback, cfg.horizon);
  if (window_index >= starts.size()) {
    throw ConfigError("window-index: " + std::to_string(window_index) +
                      " out of range (split has " + std::to_string(starts.size()) +
                      " windows)");
  }
  const std::int64_t t0 = starts[window_index];
  const std::size_t L = cfg.lookback;
  const std::size_t C = cfg.channels;

  const auto* bank_entry = model.params().find("cycle.bank");
  const std::size_t W = cfg.cycle_length;

  std::vector<double> original(C * L), cycle(C * L), residual(C * L);
  for (std::size_t c = 0; c < C; ++c) {
    const double* src = bundle.channel(c) + t0;
    double* h = original.data() + c * L;
    std::copy(src, src + L, h);
    if (cfg.instance_norm) {
      double mu = 0.0;
      for (std::size_t k = 0; k < L; ++k) mu += h[k];
      mu /= static_cast<double>(L);
      double var = 0.0;
      for (std::size_t k = 0; k < L; ++k) var += (h[k] - mu) * (h[k] - mu);
      var /= static_cast<double>(L);
      const double inv = 1.0 / std::sqrt(var + 1e-5);
      for (std::size_t k = 0; k < L; ++k) h[k] = (h[k] - mu) * inv;
    }
    for (std::size_t k = 0; k < L; ++k) {
      double q = 0.0;
      if (bank_entry) {
        const std::size_t phase = pos_mod(t0 + static_cast<std::int64_t>(k), W);
        q = static_cast<double>(bank_entry->tensor.values()[phase * C + c]);
      }
      const double r = h[k] - q;
      cycle[c * L + k] = q;
      residual[c * L + k] = r;
      original[c * L + k] = q + r;
    }
  }

  auto write_component = [&](const std::string& suffix, const std::vector<double>& v) {
    auto out = open_output(out_prefix + "_" + suffix + ".csv");
    out << "c0";
    for (std::size_t c = 1; c < C; ++c) out << ",c" << c;
    out << '\n';
    for (std::size_t k = 0; k < L; ++k) {
      for (std::size_t c = 0; c < C; ++c) {
        if (c) out << ',';
        out << format_double(v[c * L + k]);
      }
      out << '\n';
    }
  };
  write_component("original", original);
  write_component("cycle", cycle);
  write_component("residual", residual);
  std::cout << "window " << window_index << " (start " << t0 << ") -> "
            << out_prefix << "_{original,cycle,residual}.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& name, const std::string& out_path,
              std::uint64_t seed, std::size_t sine_period, std::size_t rows,
              std::size_t channels, double noise_sd) {
  if (!name.empty()) {
    const DatasetInfo* info = find_dataset(name);
    if (!info) throw ConfigError("synth: '" + name + "' is not a known benchmark");
    const auto series =
        synth_series(benchmark_mix(info->name), info->channels, info->rows, seed);
    write_series_csv(out_path, series, info->channels, info->rows,
                     benchmark_step_minutes(info->name));
    std::cout << out_path << '\n';
    return 0;
  }
  if (sine_period == 0) {
    throw ConfigError("synth: provide --name or --sine-period");
  }
  write_sine_csv(out_path, sine_period, rows, channels, noise_sd, seed);
  std::cout << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HPMixer long-horizon forecasting toolkit"};
  app.require_subcommand(1);

  // acf
  CommonOpts acf_common;
  std::size_t acf_max_lag = 0, acf_lag_min = 4;
  std::string acf_out;
  auto* acf = app.add_subcommand(
      "acf", "estimate the dominant cycle length from the train-split ACF");
  add_common_options(acf, acf_common);
  acf->add_option("--max-lag", acf_max_lag, "largest lag to scan (0 = auto)");
  acf->add_option("--lag-min", acf_lag_min, "smallest candidate lag");
  acf->add_option("--out", acf_out, "per-lag ACF CSV (lag, mean, per-channel)");

  // train
  CommonOpts train_common;
  TrainFlags train_flags;
  std::string train_out_dir;
  auto* train = app.add_subcommand("train", "train a model and save a checkpoint");
  add_common_options(train, train_common);
  add_train_flags(train, train_flags);
  train->add_option("--out-dir", train_out_dir,
                    "directory for model.ckpt, metrics.csv, history.csv, config.json");

  // eval
  CommonOpts eval_common;
  std::string eval_ckpt, eval_split = "test", eval_out;
  std::size_t eval_horizon = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common_options(eval, eval_common);
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  eval->add_option("--split", eval_split, "train/val/test (default test)");
  eval->add_option("--horizon", eval_horizon,
                   "assert the checkpoint horizon matches (0 = skip)");
  eval->add_option("--out", eval_out, "metrics CSV");

  // protocol
  CommonOpts proto_common;
  TrainFlags proto_flags;
  std::vector<std::size_t> proto_horizons;
  std::vector<std::uint64_t> proto_seeds;
  std::string proto_out;
  auto* proto = app.add_subcommand(
      "protocol", "train/eval a horizons x seeds grid with mean and avg rows");
  add_common_options(proto, proto_common);
  add_train_flags(proto, proto_flags);
  proto->add_option("--horizons", proto_horizons, "horizon list")->delimiter(',');
  proto->add_option("--seeds", proto_seeds, "seed list")->delimiter(',');
  proto->add_option("--out", proto_out, "metrics CSV");

  // ablate
  CommonOpts ablate_common;
  TrainFlags ablate_flags;
  std::vector<std::string> ablate_list;
  std::string ablate_out;
  auto* ablate = app.add_subcommand(
      "ablate", "train one variant per ablation flag with shared settings");
  add_common_options(ablate, ablate_common);
  add_train_flags(ablate, ablate_flags);
  ablate->add_option("--flags", ablate_list,
                     "variants: full, no_cycle_mlp, no_cycle_module, freeze_swt, "
                     "no_swt, one_level_patching, cycle_only")
      ->delimiter(',');
  ablate->add_option("--out", ablate_out, "results CSV");

  // search
  CommonOpts search_common;
  TrainFlags search_flags;
  std::size_t search_trials = 10;
  std::uint64_t search_seed = 3000;
  std::string search_out;
  auto* search = app.add_subcommand(
      "search", "random hyperparameter search over the canonical space");
  add_common_options(search, search_common);
  add_train_flags(search, search_flags);
  search->add_option("--trials", search_trials, "number of sampled configs");
  search->add_option("--search-seed", search_seed, "sampling seed");
  search->add_option("--out", search_out, "trial log CSV");

  // decompose
  CommonOpts dec_common;
  std::string dec_ckpt, dec_split = "test", dec_prefix = "decompose";
  std::size_t dec_window = 0;
  auto* dec = app.add_subcommand(
      "decompose", "dump one window's cycle/residual decomposition as CSVs");
  add_common_options(dec, dec_common);
  dec->add_option("--checkpoint", dec_ckpt, "model checkpoint")->required();
  dec->add_option("--split", dec_split, "train/val/test (default test)");
  dec->add_option("--window-index", dec_window, "window index within the split");
  dec->add_option("--out", dec_prefix, "output path prefix");

  // synth
  std::string synth_name, synth_out;
  std::uint64_t synth_seed = 7;
  std::size_t synth_sine_period = 0, synth_rows = 2000, synth_channels = 3;
  double synth_noise = 0.05;
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic benchmark-shaped or sine fixture CSV");
  synth->add_option("--name", synth_name, "benchmark name for a shaped fixture");
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--sine-period", synth_sine_period, "sine fixture period");
  synth->add_option("--rows", synth_rows, "sine fixture rows");
  synth->add_option("--channels", synth_channels, "sine fixture channels");
  synth->add_option("--noise", synth_noise, "sine fixture noise stddev");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(acf)) {
      return cmd_acf(acf_common, acf_max_lag, acf_lag_min, acf_out);
    }
    if (app.got_subcommand(train)) {
      return cmd_train(train_common, train_flags, train_out_dir);
    }
    if (app.got_subcommand(eval)) {
      return cmd_eval(eval_common, eval_ckpt, eval_split, eval_horizon, eval_out);
    }
    if (app.got_subcommand(proto)) {
      return cmd_protocol(proto_common, proto_flags, proto_horizons, proto_seeds,
                          proto_out);
    }
    if (app.got_subcommand(ablate)) {
      return cmd_ablate(ablate_common, ablate_flags, ablate_list, ablate_out);
    }
    if (app.got_subcommand(search)) {
      return cmd_search(search_common, search_flags, search_trials, search_seed,
                        search_out);
    }
    if (app.got_subcommand(dec)) {
      return cmd_decompose(dec_common, dec_ckpt, dec_split, dec_window, dec_prefix);
    }
    if (app.got_subcommand(synth)) {
      return cmd_synth(synth_name, synth_out, synth_seed, synth_sine_period,
                       synth_rows, synth_channels, synth_noise);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
