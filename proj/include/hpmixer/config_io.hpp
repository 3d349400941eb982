#pragma once

// JSON (de)serialisation for model / training configuration.
//
// Serialisation uses ordered JSON with a fixed key order, so a config written
// twice produces byte-identical text (used by checkpoints and run logs).
// Parsing rejects unknown keys by name: a typo in a config file fails loudly
// instead of silently training with defaults.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hpmixer/common.hpp"
#include "hpmixer/model.hpp"

namespace hpmixer {

using ordered_json = nlohmann::ordered_json;

/// Optimisation / loop settings shared by the trainer and the CLI.
struct TrainSettings {
  double lr = 1e-3;
  std::size_t epochs = 30;
  std::size_t patience = 5;        // early stop after this many non-improving epochs
  std::size_t batch_size = 32;
  std::uint64_t seed = 3000;
  // Per-epoch optimisation-step cap. Each epoch reshuffles the full window
  // set and takes the first max_steps_per_epoch * batch_size windows, so
  // successive epochs see fresh subsamples. Keeps single-core runs on the
  // large benchmarks bounded; 0 disables the cap (every window each epoch).
  std::size_t max_steps_per_epoch = 128;

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr: must be positive");
    if (epochs < 1) throw ConfigError("epochs: must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  }
};

namespace detail {

template <typename V>
void read_key(const ordered_json& j, const char* key, V& out, const char* section) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(section) + "." + key + ": wrong JSON type");
  }
}

inline void reject_unknown(const ordered_json& j, const char* section,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError(std::string(section) + ": expected a JSON object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError(std::string(section) + ": unknown key '" + item.key() + "'");
    }
  }
}

}  // namespace detail

inline ordered_json to_json(const AblationFlags& a) {
  return ordered_json{{"no_cycle_mlp", a.no_cycle_mlp},
                      {"no_cycle_module", a.no_cycle_module},
                      {"freeze_swt", a.freeze_swt},
                      {"no_swt", a.no_swt},
                      {"one_level_patching", a.one_level_patching},
                      {"cycle_only", a.cycle_only}};
}

inline AblationFlags ablation_from_json(const ordered_json& j) {
  detail::reject_unknown(j, "model.ablation",
                         {"no_cycle_mlp", "no_cycle_module", "freeze_swt", "no_swt",
                          "one_level_patching", "cycle_only"});
  AblationFlags a;
  detail::read_key(j, "no_cycle_mlp", a.no_cycle_mlp, "model.ablation");
  detail::read_key(j, "no_cycle_module", a.no_cycle_module, "model.ablation");
  detail::read_key(j, "freeze_swt", a.freeze_swt, "model.ablation");
  detail::read_key(j, "no_swt", a.no_swt, "model.ablation");
  detail::read_key(j, "one_level_patching", a.one_level_patching, "model.ablation");
  detail::read_key(j, "cycle_only", a.cycle_only, "model.ablation");
  return a;
}

inline ordered_json to_json(const ModelConfig& c) {
  return ordered_json{{"lookback", c.lookback},
                      {"horizon", c.horizon},
                      {"channels", c.channels},
                      {"cycle_length", c.cycle_length},
                      {"wavelet_levels", c.wavelet_levels},
                      {"base_wavelet", wavelet_name(c.base_wavelet)},
                      {"per_level_filters", c.per_level_filters},
                      {"patch_len_coarse", c.patch_len_coarse},
                      {"patch_len_fine", c.patch_len_fine},
                      {"d_model", c.d_model},
                      {"d_ff", c.d_ff},
                      {"n_heads", c.n_heads},
                      {"e_layers", c.e_layers},
                      {"d_cycle", c.d_cycle},
                      {"dropout", c.dropout},
                      {"fc_dropout", c.fc_dropout},
                      {"instance_norm", c.instance_norm},
                      {"shared_encoder", c.shared_encoder},
                      {"refine_lookback_cycle", c.refine_lookback_cycle},
                      {"ablation", to_json(c.ablation)}};
}

inline ModelConfig model_config_from_json(const ordered_json& j) {
  detail::reject_unknown(
      j, "model",
      {"lookback", "horizon", "channels", "cycle_length", "wavelet_levels",
       "base_wavelet", "per_level_filters", "patch_len_coarse", "patch_len_fine",
       "d_model", "d_ff", "n_heads", "e_layers", "d_cycle", "dropout", "fc_dropout",
       "instance_norm", "shared_encoder", "refine_lookback_cycle", "ablation"});
  ModelConfig c;
  detail::read_key(j, "lookback", c.lookback, "model");
  detail::read_key(j, "horizon", c.horizon, "model");
  detail::read_key(j, "channels", c.channels, "model");
  detail::read_key(j, "cycle_length", c.cycle_length, "model");
  detail::read_key(j, "wavelet_levels", c.wavelet_levels, "model");
  if (auto it = j.find("base_wavelet"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("model.base_wavelet: wrong JSON type");
    c.base_wavelet = wavelet_from_name(it->get<std::string>());
  }
  detail::read_key(j, "per_level_filters", c.per_level_filters, "model");
  detail::read_key(j, "patch_len_coarse", c.patch_len_coarse, "model");
  detail::read_key(j, "patch_len_fine", c.patch_len_fine, "model");
  detail::read_key(j, "d_model", c.d_model, "model");
  detail::read_key(j, "d_ff", c.d_ff, "model");
  detail::read_key(j, "n_heads", c.n_heads, "model");
  detail::read_key(j, "e_layers", c.e_layers, "model");
  detail::read_key(j, "d_cycle", c.d_cycle, "model");
  detail::read_key(j, "dropout", c.dropout, "model");
  detail::read_key(j, "fc_dropout", c.fc_dropout, "model");
  detail::read_key(j, "instance_norm", c.instance_norm, "model");
  detail::read_key(j, "shared_encoder", c.shared_encoder, "model");
  detail::read_key(j, "refine_lookback_cycle", c.refine_lookback_cycle, "model");
  if (auto it = j.find("ablation"); it != j.end()) {
    c.ablation = ablation_from_json(*it);
  }
  return c;
}

inline ordered_json to_json(const TrainSettings& s) {
  return ordered_json{{"lr", s.lr},
                      {"epochs", s.epochs},
                      {"patience", s.patience},
                      {"batch_size", s.batch_size},
                      {"seed", s.seed},
                      {"max_steps_per_epoch", s.max_steps_per_epoch}};
}

inline TrainSettings train_settings_from_json(const ordered_json& j) {
  detail::reject_unknown(
      j, "train", {"lr", "epochs", "patience", "batch_size", "seed",
                   "max_steps_per_epoch"});
  TrainSettings s;
  detail::read_key(j, "lr", s.lr, "train");
  detail::read_key(j, "epochs", s.epochs, "train");
  detail::read_key(j, "patience", s.patience, "train");
  detail::read_key(j, "batch_size", s.batch_size, "train");
  detail::read_key(j, "seed", s.seed, "train");
  detail::read_key(j, "max_steps_per_epoch", s.max_steps_per_epoch, "train");
  return s;
}

/// Canonical single-line config text (fixed key order) for embedding in
/// checkpoints and run logs.
inline std::string canonical_config_text(const ModelConfig& c) {
  return to_json(c).dump();
}

/// A full run description: which dataset, model shape, training settings.
struct RunConfig {
  std::string dataset_name;  // registry key, e.g. "ettm1"
  std::string dataset_path;  // CSV path; "" => resolve via HPMIXER_DATA_DIR
  ModelConfig model;
  TrainSettings train;
};

inline ordered_json to_json(const RunConfig& r) {
  return ordered_json{
      {"dataset", ordered_json{{"name", r.dataset_name}, {"path", r.dataset_path}}},
      {"model", to_json(r.model)},
      {"train", to_json(r.train)}};
}

inline RunConfig run_config_from_json(const ordered_json& j) {
  detail::reject_unknown(j, "config", {"dataset", "model", "train"});
  RunConfig r;
  if (auto it = j.find("dataset"); it != j.end()) {
    detail::reject_unknown(*it, "dataset", {"name", "path"});
    detail::read_key(*it, "name", r.dataset_name, "dataset");
    detail::read_key(*it, "path", r.dataset_path, "dataset");
  }
  if (auto it = j.find("model"); it != j.end()) r.model = model_config_from_json(*it);
  if (auto it = j.find("train"); it != j.end()) r.train = train_settings_from_json(*it);
  return r;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace hpmixer
