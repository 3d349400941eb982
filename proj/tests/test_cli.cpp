// End-to-end tests that drive the installed CLI binary through a shell,
// checking exit codes, stdout/stderr contracts and byte-stable file outputs.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef HPMIXER_CLI_PATH
#error "HPMIXER_CLI_PATH must point at the CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

struct CmdResult {
  int status = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "hpmixer_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs `<cli> args` (optionally with an env prefix), capturing both streams.
CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const fs::path out_path = work_dir() / ("stdout" + std::to_string(counter));
  const fs::path err_path = work_dir() / ("stderr" + std::to_string(counter));
  ++counter;
  const std::string cmd = env_prefix + "\"" + HPMIXER_CLI_PATH + "\" " + args +
                          " > " + out_path.string() + " 2> " + err_path.string();
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> row;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
  return row;
}

std::string sine_csv() {
  static const std::string path = [] {
    const std::string p = (work_dir() / "sine.csv").string();
    auto r = run_cli("synth --sine-period 24 --rows 400 --channels 2 --noise 0.05 "
                     "--seed 7 --out " + p);
    REQUIRE(r.status == 0);
    return p;
  }();
  return path;
}

/// Deterministic tiny training invocation (strict-valid default config).
std::string train_args(const std::string& out_dir) {
  return "train --data " + sine_csv() +
         " --lookback 48 --horizon 12 --cycle-len 24 --epochs 2 --batch-size 16 "
         "--max-steps 3 --seed 11 --quiet --out-dir " + out_dir;
}

}  // namespace

TEST_CASE("cli: acf prints the dominant cycle length to stdout") {
  auto r = run_cli("acf --data " + sine_csv());
  CHECK(r.status == 0);
  CHECK(r.out == "24\n");
}

TEST_CASE("cli: acf writes a per-lag csv with mean and per-channel columns") {
  const auto out = (work_dir() / "acf.csv").string();
  auto r = run_cli("acf --data " + sine_csv() + " --max-lag 60 --out " + out);
  REQUIRE(r.status == 0);
  const auto lines = lines_of(read_file(out));
  REQUIRE(lines.size() == 62);  // header + lags 0..60
  CHECK(lines[0] == "lag,mean,c0,c1");
  auto row0 = parse_csv_row(lines[1]);
  REQUIRE(row0.size() == 4);
  CHECK(row0[0] == 0.0);
  CHECK(row0[1] == 1.0);  // lag-0 autocorrelation
  // Rerun is byte-identical.
  const auto out2 = (work_dir() / "acf2.csv").string();
  run_cli("acf --data " + sine_csv() + " --max-lag 60 --out " + out2);
  CHECK(read_file(out) == read_file(out2));
}

TEST_CASE("cli: train writes checkpoint, metrics, history and config") {
  const auto dir = (work_dir() / "run1").string();
  auto r = run_cli(train_args(dir));
  REQUIRE(r.status == 0);
  CHECK(r.out.find("test mse") != std::string::npos);

  REQUIRE(fs::exists(dir + "/model.ckpt"));
  REQUIRE(fs::exists(dir + "/metrics.csv"));
  REQUIRE(fs::exists(dir + "/history.csv"));
  REQUIRE(fs::exists(dir + "/config.json"));

  const auto metrics = lines_of(read_file(dir + "/metrics.csv"));
  REQUIRE(metrics.size() == 2);
  CHECK(metrics[0] == "dataset,horizon,seed,mse,mae");
  CHECK(metrics[1].rfind("custom,12,11,", 0) == 0);

  const auto history = lines_of(read_file(dir + "/history.csv"));
  REQUIRE(history.size() >= 2);
  CHECK(history[0] == "epoch,train_loss,val_mse");
  CHECK(history[1].rfind("1,", 0) == 0);

  const auto config = read_file(dir + "/config.json");
  CHECK(config.find("\"cycle_length\": 24") != std::string::npos);
}

TEST_CASE("cli: identical seeded runs produce byte-identical outputs") {
  const auto dir1 = (work_dir() / "det1").string();
  const auto dir2 = (work_dir() / "det2").string();
  REQUIRE(run_cli(train_args(dir1)).status == 0);
  REQUIRE(run_cli(train_args(dir2)).status == 0);
  CHECK(read_file(dir1 + "/metrics.csv") == read_file(dir2 + "/metrics.csv"));
  CHECK(read_file(dir1 + "/history.csv") == read_file(dir2 + "/history.csv"));
  CHECK(read_file(dir1 + "/model.ckpt") == read_file(dir2 + "/model.ckpt"));
  CHECK(read_file(dir1 + "/config.json") == read_file(dir2 + "/config.json"));

  // A different seed changes the metrics.
  const auto dir3 = (work_dir() / "det3").string();
  auto other = train_args(dir3);
  const auto pos = other.find("--seed 11");
  REQUIRE(pos != std::string::npos);
  other.replace(pos, 9, "--seed 12");
  REQUIRE(run_cli(other).status == 0);
  CHECK(read_file(dir1 + "/metrics.csv") != read_file(dir3 + "/metrics.csv"));
}

TEST_CASE("cli: eval reuses a checkpoint and enforces the horizon") {
  const auto dir = (work_dir() / "run1").string();
  if (!fs::exists(dir + "/model.ckpt")) REQUIRE(run_cli(train_args(dir)).status == 0);

  const auto out = (work_dir() / "eval.csv").string();
  auto r = run_cli("eval --checkpoint " + dir + "/model.ckpt --data " + sine_csv() +
                   " --split val --horizon 12 --quiet --out " + out);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("val mse") != std::string::npos);
  const auto rows = lines_of(read_file(out));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "dataset,horizon,seed,mse,mae");

  auto bad = run_cli("eval --checkpoint " + dir + "/model.ckpt --data " + sine_csv() +
                     " --horizon 24 --quiet");
  CHECK(bad.status == 1);
  CHECK(bad.err.rfind("error:", 0) == 0);
  CHECK(bad.err.find("horizon") != std::string::npos);

  auto missing = run_cli("eval --data " + sine_csv());  // --checkpoint required
  CHECK(missing.status != 0);
}

TEST_CASE("cli: ablate emits one csv row per requested variant") {
  const std::string base = "ablate --data " + sine_csv() +
                           " --lookback 48 --horizon 12 --cycle-len 24 --epochs 1 "
                           "--batch-size 16 --max-steps 2 --seed 11 --quiet";
  const auto out1 = (work_dir() / "abl1.csv").string();
  auto one = run_cli(base + " --flags cycle_only --out " + out1);
  REQUIRE(one.status == 0);
  auto lines1 = lines_of(read_file(out1));
  REQUIRE(lines1.size() == 2);
  CHECK(lines1[0] == "variant,mse,mae,parameter_count,best_epoch");
  CHECK(lines1[1].rfind("cycle_only,", 0) == 0);

  const auto out5 = (work_dir() / "abl5.csv").string();
  auto five = run_cli(base +
                      " --flags no_cycle_mlp,no_cycle_module,freeze_swt,no_swt,"
                      "one_level_patching --out " + out5);
  REQUIRE(five.status == 0);
  auto lines5 = lines_of(read_file(out5));
  REQUIRE(lines5.size() == 6);  // header + five variants
  CHECK(lines5[1].rfind("no_cycle_mlp,", 0) == 0);
  CHECK(lines5[5].rfind("one_level_patching,", 0) == 0);

  auto unknown = run_cli(base + " --flags not_a_flag");
  CHECK(unknown.status == 1);
  CHECK(unknown.err.rfind("error:", 0) == 0);
  CHECK(unknown.err.find("not_a_flag") != std::string::npos);
}

TEST_CASE("cli: random search logs trials and is reproducible") {
  const std::string base = "search --data " + sine_csv() +
                           " --lookback 48 --horizon 12 --cycle-len 24 --epochs 1 "
                           "--batch-size 8 --max-steps 1 --seed 11 --quiet "
                           "--trials 2 --search-seed 5";
  const auto out1 = (work_dir() / "search1.csv").string();
  const auto out2 = (work_dir() / "search2.csv").string();
  auto r1 = run_cli(base + " --out " + out1);
  REQUIRE(r1.status == 0);
  CHECK(r1.out.find("best trial") != std::string::npos);
  auto lines = lines_of(read_file(out1));
  REQUIRE(lines.size() == 3);  // header + two trials
  CHECK(lines[0].rfind("trial,lr,d_model", 0) == 0);
  CHECK(lines[1].rfind("1,", 0) == 0);
  CHECK(lines[2].rfind("2,", 0) == 0);

  auto r2 = run_cli(base + " --out " + out2);
  REQUIRE(r2.status == 0);
  CHECK(read_file(out1) == read_file(out2));
  CHECK(r1.out == r2.out);
}

TEST_CASE("cli: protocol sweeps horizons x seeds and appends mean and avg rows") {
  const auto out = (work_dir() / "protocol.csv").string();
  auto r = run_cli("protocol --data " + sine_csv() +
                   " --lookback 48 --cycle-len 24 --epochs 1 --batch-size 16 "
                   "--max-steps 2 --quiet --horizons 12,24 --seeds 5,6 --out " +
                   out);
  REQUIRE(r.status == 0);

  const auto lines = lines_of(read_file(out));
  REQUIRE(lines.size() == 8);  // header + 2 horizons x (2 seeds + mean) + avg
  CHECK(lines[0] == "dataset,horizon,seed,mse,mae");
  CHECK(lines[1].rfind("custom,12,5,", 0) == 0);
  CHECK(lines[2].rfind("custom,12,6,", 0) == 0);
  CHECK(lines[3].rfind("custom,12,mean,", 0) == 0);
  CHECK(lines[4].rfind("custom,24,5,", 0) == 0);
  CHECK(lines[5].rfind("custom,24,6,", 0) == 0);
  CHECK(lines[6].rfind("custom,24,mean,", 0) == 0);
  CHECK(lines[7].rfind("custom,avg,mean,", 0) == 0);

  // The per-horizon mean row averages the two seed rows above it.
  for (std::size_t mean_row : {std::size_t{3}, std::size_t{6}}) {
    const auto a = parse_csv_row(lines[mean_row - 2].substr(lines[mean_row - 2].find(",5,") + 3));
    const auto b = parse_csv_row(lines[mean_row - 1].substr(lines[mean_row - 1].find(",6,") + 3));
    const auto m = parse_csv_row(lines[mean_row].substr(lines[mean_row].find(",mean,") + 6));
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    REQUIRE(m.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::fabs(m[k] - 0.5 * (a[k] + b[k])) <= 1e-8 * std::max(1.0, std::fabs(m[k])));
    }
  }

  // stdout carries the same rows, without the header.
  const auto printed = lines_of(r.out);
  REQUIRE(printed.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(printed[i] == lines[i + 1]);
}

TEST_CASE("cli: decompose writes three csvs whose columns re-add exactly") {
  const auto dir = (work_dir() / "run1").string();
  if (!fs::exists(dir + "/model.ckpt")) REQUIRE(run_cli(train_args(dir)).status == 0);

  const auto prefix = (work_dir() / "dec").string();
  auto r = run_cli("decompose --checkpoint " + dir + "/model.ckpt --data " +
                   sine_csv() + " --split test --window-index 3 --out " + prefix);
  REQUIRE(r.status == 0);

  const auto original = lines_of(read_file(prefix + "_original.csv"));
  const auto cycle = lines_of(read_file(prefix + "_cycle.csv"));
  const auto residual = lines_of(read_file(prefix + "_residual.csv"));
  REQUIRE(original.size() == 49);  // header + 48 lookback rows
  REQUIRE(cycle.size() == 49);
  REQUIRE(residual.size() == 49);
  CHECK(original[0] == "c0,c1");

  bool any_nonzero_cycle = false;
  for (std::size_t i = 1; i < original.size(); ++i) {
    const auto o = parse_csv_row(original[i]);
    const auto q = parse_csv_row(cycle[i]);
    const auto s = parse_csv_row(residual[i]);
    REQUIRE(o.size() == 2);
    REQUIRE(q.size() == 2);
    REQUIRE(s.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(o[c] == q[c] + s[c]);  // exact in double, by construction
      if (q[c] != 0.0) any_nonzero_cycle = true;
    }
  }
  CHECK(any_nonzero_cycle);  // the trained bank is not the zero table

  auto out_of_range = run_cli("decompose --checkpoint " + dir +
                              "/model.ckpt --data " + sine_csv() +
                              " --window-index 99999 --out " + prefix);
  CHECK(out_of_range.status == 1);
  CHECK(out_of_range.err.rfind("error:", 0) == 0);
}

TEST_CASE("cli: config files are validated and unknown keys are named") {
  const auto cfg_path = (work_dir() / "bad.json").string();
  {
    std::ofstream out(cfg_path);
    out << "{\"model\": {\"bogus_key\": 1}}\n";
  }
  auto r = run_cli("train --config " + cfg_path + " --data " + sine_csv() +
                   " --quiet");
  CHECK(r.status == 1);
  CHECK(r.err.rfind("error:", 0) == 0);
  CHECK(r.err.find("bogus_key") != std::string::npos);

  const auto good_path = (work_dir() / "good.json").string();
  {
    std::ofstream out(good_path);
    out << "{\"model\": {\"lookback\": 48, \"horizon\": 12, \"cycle_length\": 24},"
           " \"train\": {\"epochs\": 1, \"batch_size\": 16, "
           "\"max_steps_per_epoch\": 2, \"seed\": 11}}\n";
  }
  const auto dir = (work_dir() / "cfg_run").string();
  auto ok = run_cli("train --config " + good_path + " --data " + sine_csv() +
                    " --quiet --out-dir " + dir);
  REQUIRE(ok.status == 0);
  const auto metrics = lines_of(read_file(dir + "/metrics.csv"));
  CHECK(metrics[1].rfind("custom,12,11,", 0) == 0);
}

TEST_CASE("cli: dataset lookup falls back to HPMIXER_DATA_DIR") {
  const auto data_dir = work_dir() / "datadir";
  fs::create_directories(data_dir);
  fs::copy_file(sine_csv(), data_dir / "mystream.csv",
                fs::copy_options::overwrite_existing);
  auto r = run_cli("acf --dataset mystream",
                   "HPMIXER_DATA_DIR=\"" + data_dir.string() + "\" ");
  CHECK(r.status == 0);
  CHECK(r.out == "24\n");

  auto unset = run_cli("acf --dataset mystream", "HPMIXER_DATA_DIR= ");
  CHECK(unset.status == 1);
  CHECK(unset.err.rfind("error:", 0) == 0);

  auto nothing = run_cli("acf");
  CHECK(nothing.status == 1);
  CHECK(nothing.err.find("--data") != std::string::npos);
}

TEST_CASE("cli: missing dataset file is a one-line error") {
  auto r = run_cli("acf --data /nonexistent/path.csv");
  CHECK(r.status == 1);
  const auto errs = lines_of(r.err);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].rfind("error:", 0) == 0);
  CHECK(errs[0].find("/nonexistent/path.csv") != std::string::npos);
}
