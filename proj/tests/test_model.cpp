#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hpmixer/checkpoint.hpp"
#include "hpmixer/gradcheck.hpp"
#include "hpmixer/model.hpp"
#include "hpmixer/rng.hpp"

using namespace hpmixer;

namespace {

/// Small structurally-valid configuration used across these tests.
ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.lookback = 48;
  cfg.horizon = 12;
  cfg.channels = 3;
  cfg.cycle_length = 24;
  cfg.wavelet_levels = 1;
  cfg.base_wavelet = BaseWavelet::haar;
  cfg.patch_len_coarse = 12;
  cfg.patch_len_fine = 4;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.n_heads = 2;
  cfg.e_layers = 1;
  cfg.d_cycle = 4;
  cfg.dropout = 0.0;
  cfg.fc_dropout = 0.0;
  return cfg;
}

std::size_t linear_params(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t mlp_params(std::size_t in, std::size_t hid, std::size_t out) {
  return linear_params(in, hid) + linear_params(hid, out);
}
std::size_t encoder_layer_params(std::size_t d, std::size_t d_ff) {
  return 4 * linear_params(d, d) + 2 * 2 * d + linear_params(d, d_ff) +
         linear_params(d_ff, d);
}

/// Independent parameter-count oracle mirroring the architecture contract.
std::size_t expected_param_count(const ModelConfig& c) {
  std::size_t total = 0;
  if (!c.ablation.no_cycle_module) {
    total += c.cycle_length * c.channels;
    if (!c.ablation.no_cycle_mlp) {
      const std::size_t dc = c.resolved_d_cycle();
      total += linear_params(c.channels, dc) + linear_params(dc, c.channels) +
               2 * c.channels;
    }
  }
  if (c.ablation.cycle_only) return total;
  if (!c.ablation.no_swt) {
    const std::size_t K = wavelet_filter_length(c.base_wavelet);
    total += 4 * K * (c.per_level_filters ? c.wavelet_levels : 1);
  }
  const std::size_t bands = c.band_count();
  const std::size_t encoders = c.shared_encoder ? 1 : bands;
  const std::size_t enc_params = linear_params(c.patch_len_coarse, c.d_model) +
                                 c.e_layers * encoder_layer_params(c.d_model, c.d_ff) +
                                 linear_params(c.d_model, c.patch_len_coarse);
  total += encoders * enc_params;
  const std::size_t n_fine = c.patch_len_coarse / c.resolved_patch_fine();
  total += bands * (mlp_params(n_fine, c.d_ff, n_fine) +
                    mlp_params(c.lookback, c.d_ff, c.lookback) +
                    mlp_params(c.patch_len_coarse, c.d_ff, c.patch_len_coarse));
  total += mlp_params(c.lookback, c.d_ff, c.lookback) +
           linear_params(c.lookback, c.horizon);
  return total;
}

Tensor<double> toy_input(const ModelConfig& cfg, std::size_t batch,
                         std::uint64_t seed = 42) {
  Rng rng(seed);
  return Tensor<double>::randn({batch, cfg.channels, cfg.lookback}, rng);
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  using Catch::Matchers::ContainsSubstring;
  auto cfg = toy_config();
  CHECK_NOTHROW(cfg.validate(false));

  auto bad = cfg;
  bad.channels = 0;
  CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("channels"));
  bad = cfg;
  bad.cycle_length = 0;
  CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("cycle_length"));
  bad = cfg;
  bad.n_heads = 3;  // does not divide d_model = 8
  CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("n_heads"));
  bad = cfg;
  bad.dropout = 1.0;
  CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("dropout"));
  bad = cfg;
  bad.patch_len_coarse = 36;
  CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("patch_len_coarse"));
  bad = cfg;
  bad.wavelet_levels = 6;  // haar support 33 <= 48: structurally fine
  CHECK_NOTHROW(bad.validate(false));
  // Make everything else strict-valid so the strict level cap is what fires.
  bad.d_model = 32;
  bad.d_ff = 32;
  bad.dropout = 0.4;
  bad.fc_dropout = 0.1;
  CHECK_THROWS_WITH(bad.validate(true), ContainsSubstring("wavelet_levels"));
  bad = cfg;
  bad.base_wavelet = BaseWavelet::db2;
  bad.wavelet_levels = 5;  // support (4-1)*16+1 = 49 > 48
  CHECK_THROWS_WITH(bad.validate(false), ContainsSubstring("wavelet_levels"));
  bad = cfg;
  bad.ablation.cycle_only = true;
  bad.ablation.no_cycle_module = true;
  CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("ablation"));
}

TEST_CASE("strict validation enforces the canonical search space") {
  using Catch::Matchers::ContainsSubstring;
  auto cfg = toy_config();
  // Structurally fine but outside the search grid on several axes.
  CHECK_NOTHROW(cfg.validate(false));
  CHECK_THROWS_WITH(cfg.validate(true), ContainsSubstring("d_model"));

  cfg.d_model = 32;
  cfg.d_ff = 64;
  CHECK_THROWS_WITH(cfg.validate(true), ContainsSubstring("dropout"));
  cfg.dropout = 0.4;
  cfg.fc_dropout = 0.1;
  CHECK_NOTHROW(cfg.validate(true));

  cfg.fc_dropout = 0.15;
  CHECK_THROWS_WITH(cfg.validate(true), ContainsSubstring("fc_dropout"));
  cfg.fc_dropout = 0.2;
  cfg.patch_len_coarse = 6;
  cfg.patch_len_fine = 3;  // keeps the structural divisibility intact
  CHECK_THROWS_WITH(cfg.validate(true), ContainsSubstring("patch_len_coarse"));
}

TEST_CASE("derived quantities resolve as documented") {
  auto cfg = toy_config();
  CHECK(cfg.resolved_patch_fine() == 4);
  cfg.patch_len_fine = 0;
  CHECK(cfg.resolved_patch_fine() == 6);  // coarse/2
  cfg.ablation.one_level_patching = true;
  CHECK(cfg.resolved_patch_fine() == cfg.patch_len_coarse);
  cfg.d_cycle = 0;
  CHECK(cfg.resolved_d_cycle() == 4 * cfg.channels);
  CHECK(cfg.band_count() == 2);  // J=1: approx + one detail
  cfg.ablation.no_swt = true;
  CHECK(cfg.band_count() == 1);
}

TEST_CASE("forward produces (B, C, H) across horizons and batch sizes") {
  for (std::size_t H : {std::size_t{1}, std::size_t{12}, std::size_t{30}}) {
    auto cfg = toy_config();
    cfg.horizon = H;
    HpMixerModel<double> model(cfg, 7);
    auto x = toy_input(cfg, 2);
    auto y = model.forward(x, {0, 157}, RunContext{});
    REQUIRE(y.shape() == Shape{2, cfg.channels, H});
    for (double v : y.values()) CHECK(std::isfinite(v));
  }
  // Single-channel attention degenerates to one token and still works.
  auto cfg = toy_config();
  cfg.channels = 1;
  cfg.d_cycle = 2;
  HpMixerModel<double> model(cfg, 7);
  auto y = model.forward(toy_input(cfg, 1), {5}, RunContext{});
  REQUIRE(y.shape() == Shape{1, 1, cfg.horizon});
}

TEST_CASE("forward validates input shape and start offsets") {
  auto cfg = toy_config();
  HpMixerModel<double> model(cfg, 7);
  Rng rng(1);
  CHECK_THROWS_AS(
      model.forward(Tensor<double>::randn({2, 3, 47}, rng), {0, 1}, RunContext{}),
      ShapeError);
  CHECK_THROWS_AS(model.forward(toy_input(cfg, 2), {0}, RunContext{}), ShapeError);
}

TEST_CASE("parameter count matches the analytic oracle across variants") {
  auto base = toy_config();
  std::vector<ModelConfig> variants;
  variants.push_back(base);

  auto v = base;
  v.shared_encoder = false;
  v.wavelet_levels = 2;
  variants.push_back(v);

  v = base;
  v.ablation.no_swt = true;
  variants.push_back(v);

  v = base;
  v.ablation.cycle_only = true;
  variants.push_back(v);

  v = base;
  v.ablation.no_cycle_module = true;
  variants.push_back(v);

  v = base;
  v.ablation.no_cycle_mlp = true;
  v.per_level_filters = false;
  v.wavelet_levels = 3;
  variants.push_back(v);

  for (const auto& cfg : variants) {
    HpMixerModel<double> model(cfg, 11);
    CHECK(model.parameter_count() == expected_param_count(cfg));
  }

  // More capacity strictly increases the count.
  auto bigger = base;
  bigger.d_model = 16;
  HpMixerModel<double> small(base, 1), big(bigger, 1);
  CHECK(big.parameter_count() > small.parameter_count());
}

TEST_CASE("freeze_swt keeps filter taps out of the trainable count") {
  auto cfg = toy_config();
  cfg.ablation.freeze_swt = true;
  HpMixerModel<double> model(cfg, 3);
  const std::size_t filter_params = 4 * 2;  // haar, J=1, per level
  CHECK(model.parameter_count() ==
        model.trainable_parameter_count() + filter_params);

  auto plain = toy_config();
  HpMixerModel<double> unfrozen(plain, 3);
  CHECK(unfrozen.parameter_count() == unfrozen.trainable_parameter_count());
}

TEST_CASE("with a zeroed output head the forecast is exactly the cycle part") {
  auto cfg = toy_config();
  cfg.instance_norm = false;
  cfg.ablation.no_cycle_mlp = true;  // refinement is the identity
  HpMixerModel<double> model(cfg, 19);

  auto head_w = model.params().find("head.out.weight");
  REQUIRE(head_w != nullptr);
  for (auto& v : head_w->tensor.values()) v = 0.0;
  // head.out.bias starts at zero already.

  // Give the bank distinctive values so the check is non-trivial.
  Rng rng(23);
  for (auto& v : model.params().find("cycle.bank")->tensor.values()) {
    v = rng.normal();
  }

  const std::vector<std::int64_t> t_starts{3, -40};
  auto y = model.forward(toy_input(cfg, 2), t_starts, RunContext{});

  std::vector<std::int64_t> fut(t_starts);
  for (auto& t : fut) t += static_cast<std::int64_t>(cfg.lookback);
  auto expected = model.cycle()->slice(fut, cfg.horizon);
  CHECK(y.value_vec() == expected.value_vec());  // bitwise: y = 0 + slice
}

TEST_CASE("cycle_only forecasts with the refined bank slice alone") {
  auto cfg = toy_config();
  cfg.instance_norm = false;
  cfg.ablation.cycle_only = true;
  cfg.ablation.no_cycle_mlp = true;
  HpMixerModel<double> model(cfg, 19);
  Rng rng(29);
  for (auto& v : model.params().find("cycle.bank")->tensor.values()) {
    v = rng.normal();
  }
  const std::vector<std::int64_t> t_starts{11};
  auto y = model.forward(toy_input(cfg, 1), t_starts, RunContext{});
  auto expected = model.cycle()->slice({11 + 48}, cfg.horizon);
  CHECK(y.value_vec() == expected.value_vec());
}

TEST_CASE("model is equivariant to channel permutations without the bank") {
  auto cfg = toy_config();
  cfg.channels = 4;
  cfg.ablation.no_cycle_module = true;  // the bank is per-channel by design
  HpMixerModel<double> model(cfg, 31);

  auto x = toy_input(cfg, 2, 91);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  Tensor<double> xp(x.shape());
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t t = 0; t < cfg.lookback; ++t) {
        xp.at(b, c, t) = x.at(b, perm[c], t);
      }
    }
  }
  auto y = model.forward(x, {0, 9}, RunContext{});
  auto yp = model.forward(xp, {0, 9}, RunContext{});
  double worst = 0.0;
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t t = 0; t < cfg.horizon; ++t) {
        worst = std::max(worst, std::abs(yp.at(b, c, t) - y.at(b, perm[c], t)));
      }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("initialisation and forward are seed-deterministic") {
  auto cfg = toy_config();
  HpMixerModel<double> a(cfg, 5), b(cfg, 5), c(cfg, 6);
  REQUIRE(a.parameter_count() == b.parameter_count());
  const auto& ea = a.params().entries();
  const auto& eb = b.params().entries();
  bool all_equal = true, any_diff_from_c = false;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i].tensor.value_vec() != eb[i].tensor.value_vec()) all_equal = false;
    if (ea[i].tensor.value_vec() != c.params().entries()[i].tensor.value_vec()) {
      any_diff_from_c = true;
    }
  }
  CHECK(all_equal);
  CHECK(any_diff_from_c);

  auto x = toy_input(cfg, 2);
  auto ya = a.forward(x, {0, 3}, RunContext{});
  auto yb = b.forward(x, {0, 3}, RunContext{});
  CHECK(ya.value_vec() == yb.value_vec());
}

TEST_CASE("dropout masks differ between training runs but not within a seed") {
  auto cfg = toy_config();
  cfg.dropout = 0.4;
  cfg.fc_dropout = 0.1;
  HpMixerModel<double> model(cfg, 5);
  auto x = toy_input(cfg, 1);
  auto y1 = model.forward(x, {0}, RunContext{true, 111});
  auto y2 = model.forward(x, {0}, RunContext{true, 111});
  auto y3 = model.forward(x, {0}, RunContext{true, 222});
  // Each site advances its call counter, so identical seeds give fresh masks
  // per call; different run seeds give a different stream entirely.
  CHECK(y1.value_vec() != y2.value_vec());
  CHECK(y1.value_vec() != y3.value_vec());
  auto e1 = model.forward(x, {0}, RunContext{false, 111});
  auto e2 = model.forward(x, {0}, RunContext{false, 999});
  CHECK(e1.value_vec() == e2.value_vec());  // eval ignores the seed
}

TEST_CASE("full-model gradient check on a tiny configuration") {
  ModelConfig cfg;
  cfg.lookback = 16;
  cfg.horizon = 4;
  cfg.channels = 2;
  cfg.cycle_length = 8;
  cfg.wavelet_levels = 1;
  cfg.base_wavelet = BaseWavelet::haar;
  cfg.patch_len_coarse = 8;
  cfg.patch_len_fine = 4;
  cfg.d_model = 8;
  cfg.d_ff = 8;
  cfg.n_heads = 2;
  cfg.e_layers = 1;
  cfg.d_cycle = 4;
  cfg.dropout = 0.0;
  cfg.fc_dropout = 0.0;
  HpMixerModel<double> model(cfg, 17);

  // Nudge the zero-initialised bank so its gradient path is generic.
  Rng rng(3);
  for (auto& v : model.params().find("cycle.bank")->tensor.values()) {
    v = 0.1 * rng.normal();
  }

  auto x = toy_input(cfg, 2, 57);
  auto target = Tensor<double>::randn({2, 2, 4}, rng);
  const std::vector<std::int64_t> t_starts{1, 30};

  std::vector<Tensor<double>> inputs;
  inputs.push_back(x);
  for (auto& e : model.params().entries()) inputs.push_back(e.tensor);

  auto f = [&](const std::vector<Tensor<double>>& in) {
    return mse_loss(model.forward(in[0], t_starts, RunContext{}), target);
  };
  auto result = grad_check<double>(f, inputs, 1e-5, 1e-3);
  INFO("worst rel err " << result.max_rel_err << " at input "
                        << result.worst_input << " elem " << result.worst_element
                        << " analytic " << result.analytic_at_worst << " numeric "
                        << result.numeric_at_worst);
  CHECK(result.max_rel_err < 1e-3);
}

TEST_CASE("decompose returns an exact additive split in model space") {
  auto cfg = toy_config();
  HpMixerModel<double> model(cfg, 13);
  Rng rng(41);
  for (auto& v : model.params().find("cycle.bank")->tensor.values()) {
    v = rng.normal();
  }
  auto x = toy_input(cfg, 2);
  auto parts = model.decompose(x, {4, 90});
  REQUIRE(parts.original.shape() == x.shape());
  REQUIRE(parts.cycle.shape() == x.shape());
  REQUIRE(parts.residual.shape() == x.shape());
  // residual is literally sub(original, cycle): the split re-adds bitwise.
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(parts.original[i] - parts.cycle[i] == parts.residual[i]);
  }
  // cycle part equals the raw bank slice (no refinement in the decomposition)
  auto slice = model.cycle()->slice({4, 90}, cfg.lookback);
  CHECK(parts.cycle.value_vec() == slice.value_vec());

  // A fresh model has an all-zero bank: cycle part is exactly zero and the
  // residual equals the normalised input.
  HpMixerModel<double> fresh(cfg, 13);
  auto fresh_parts = fresh.decompose(x, {4, 90});
  for (double v : fresh_parts.cycle.values()) CHECK(v == 0.0);
  CHECK(fresh_parts.residual.value_vec() == fresh_parts.original.value_vec());

  // Without the cycle module the decomposition still holds with zero cycle.
  auto nc = cfg;
  nc.ablation.no_cycle_module = true;
  HpMixerModel<double> no_cycle(nc, 13);
  auto nc_parts = no_cycle.decompose(x, {4, 90});
  for (double v : nc_parts.cycle.values()) CHECK(v == 0.0);
}

TEST_CASE("checkpoint round trip preserves behaviour and bytes") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "hpmixer_ckpt_test";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();
  const std::string path2 = (dir / "model2.ckpt").string();

  auto cfg = toy_config();
  HpMixerModel<double> model(cfg, 77);
  Rng rng(7);
  for (auto& v : model.params().find("cycle.bank")->tensor.values()) {
    v = rng.normal();
  }
  save_checkpoint(model, path);

  auto loaded = load_checkpoint<double>(path);
  CHECK(loaded.seed() == 77);
  CHECK(loaded.parameter_count() == model.parameter_count());
  auto x = toy_input(cfg, 2);
  CHECK(loaded.forward(x, {0, 5}, RunContext{}).value_vec() ==
        model.forward(x, {0, 5}, RunContext{}).value_vec());

  // save(load(save(x))) is byte-identical.
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  CHECK_FALSE(b1.empty());

  // Width mismatch: the file stores doubles.
  CHECK_THROWS_WITH(load_checkpoint<float>(path),
                    Catch::Matchers::ContainsSubstring("8-byte"));

  // Corrupt magic.
  {
    std::ofstream bad(path2, std::ios::binary);
    bad << "NOPE" << b1.substr(4);
  }
  CHECK_THROWS_AS(load_checkpoint<double>(path2), DataError);

  // Truncation.
  {
    std::ofstream trunc(path2, std::ios::binary);
    trunc << b1.substr(0, b1.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint<double>(path2), DataError);

  CHECK_THROWS_AS(load_checkpoint<double>((dir / "missing.ckpt").string()),
                  DataError);
  fs::remove_all(dir);
}
