#pragma once

// Dataset handling: CSV loading, the benchmark registry, chronological
// splits, train-statistics standardisation, sliding-window enumeration and
// forecasting metrics.
//
// Split protocol:
//  * ETT hourly: train [0, 8640), val [8640, 11520), test [11520, 14400)
//    (12/4/4 months of hourly rows); extra trailing rows are dropped.
//  * ETT 15-minute: the same boundaries times 4.
//  * everything else: 7:1:2 by floor(0.7*T) / remainder / floor(0.2*T).
// Val/test windows may reach back `lookback` rows across their left boundary
// (the community lookback-overlap convention); train windows never see val
// or test rows, and standardisation uses train rows only.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "hpmixer/common.hpp"
#include "hpmixer/tensor.hpp"

namespace hpmixer {

enum class SplitKind { ett_hourly, ett_minute, ratio };
enum class Split { train, val, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

/// Known benchmark shapes. `table_windows` are the usable-window counts at
/// the reference lookback L0=96 (horizon not subtracted; val/test include
/// the lookback overlap) — the numbers the community split tables quote.
struct DatasetInfo {
  std::string name;
  SplitKind kind;
  std::size_t channels;
  std::size_t rows;
  std::array<std::size_t, 3> table_windows;
};

inline const std::vector<DatasetInfo>& dataset_registry() {
  static const std::vector<DatasetInfo> registry{
      {"etth1", SplitKind::ett_hourly, 7, 17420, {8545, 2881, 2881}},
      {"etth2", SplitKind::ett_hourly, 7, 17420, {8545, 2881, 2881}},
      {"ettm1", SplitKind::ett_minute, 7, 69680, {34465, 11521, 11521}},
      {"ettm2", SplitKind::ett_minute, 7, 69680, {34465, 11521, 11521}},
      {"weather", SplitKind::ratio, 21, 52696, {36792, 5271, 10540}},
      {"ecl", SplitKind::ratio, 321, 26304, {18317, 2633, 5261}},
      {"traffic", SplitKind::ratio, 862, 17544, {12185, 1757, 3509}},
  };
  return registry;
}

inline const DatasetInfo* find_dataset(const std::string& name) {
  std::string lower;
  lower.reserve(name.size());
  for (char ch : name) lower.push_back(static_cast<char>(std::tolower(ch)));
  for (const auto& d : dataset_registry()) {
    if (d.name == lower) return &d;
  }
  return nullptr;
}

/// Raw row boundaries: train [0, train_end), val [train_end, val_end),
/// test [val_end, rows_used).
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t rows_used = 0;
};

inline SplitBounds chronological_bounds(SplitKind kind, std::size_t rows) {
  SplitBounds b;
  switch (kind) {
    case SplitKind::ett_hourly:
      b = {8640, 11520, 14400};
      break;
    case SplitKind::ett_minute:
      b = {34560, 46080, 57600};
      break;
    case SplitKind::ratio: {
      const std::size_t train = (rows * 7) / 10;
      const std::size_t test = (rows * 2) / 10;
      b = {train, rows - test, rows};
      break;
    }
  }
  if (rows < b.rows_used) {
    throw DataError("split: dataset has " + std::to_string(rows) +
                    " rows but the protocol needs " + std::to_string(b.rows_used));
  }
  return b;
}

/// Usable-window counts at reference lookback L0=96 (table convention).
inline std::array<std::size_t, 3> table_window_counts(const SplitBounds& b) {
  constexpr std::size_t kRefLookback = 96;
  return {b.train_end - kRefLookback + 1,
          (b.val_end - b.train_end) + 1,
          (b.rows_used - b.val_end) + 1};
}

// ---------------------------------------------------------------------------
// CSV parsing
// ---------------------------------------------------------------------------

/// Raw numeric CSV content: first column (timestamps) is skipped; remaining
/// columns become channels. Values stored row-major (C, T).
struct RawCsv {
  std::vector<std::string> channel_names;
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::vector<double> values;  // [c * rows + t]
};

namespace detail {

inline void split_csv_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

/// Loads a benchmark-style CSV (header mandatory, first column timestamps).
inline RawCsv load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  RawCsv csv;
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  detail::split_csv_line(line, cells);
  if (cells.size() < 2) {
    throw DataError("csv: '" + path + "' header needs a timestamp column plus "
                    "at least one channel column");
  }
  csv.channel_names.assign(cells.begin() + 1, cells.end());
  csv.channels = csv.channel_names.size();

  // Column-major staging (per-channel contiguous) while reading row by row.
  std::vector<std::vector<double>> cols(csv.channels);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    detail::split_csv_line(line, cells);
    if (cells.size() != csv.channels + 1) {
      throw DataError("csv: '" + path + "' row " + std::to_string(row + 2) +
                      " has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(csv.channels + 1));
    }
    for (std::size_t c = 0; c < csv.channels; ++c) {
      const std::string& cell = cells[c + 1];
      double v = 0.0;
      const char* first = cell.data();
      const char* last = first + cell.size();
      while (first < last && (*first == ' ' || *first == '\t')) ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) {
        throw DataError("csv: '" + path + "' row " + std::to_string(row + 2) +
                        ", column '" + csv.channel_names[c] +
                        "': cannot parse '" + cell + "' as a number");
      }
      cols[c].push_back(v);
    }
    ++row;
  }
  if (row == 0) throw DataError("csv: '" + path + "' has a header but no data rows");
  csv.rows = row;
  csv.values.resize(csv.channels * csv.rows);
  for (std::size_t c = 0; c < csv.channels; ++c) {
    std::copy(cols[c].begin(), cols[c].end(), csv.values.begin() + c * csv.rows);
  }
  return csv;
}

// ---------------------------------------------------------------------------
// DatasetBundle
// ---------------------------------------------------------------------------

/// A loaded, split, standardised dataset ready for window iteration.
/// `standardized` holds z-scored values using TRAIN-rows statistics only.
struct DatasetBundle {
  std::string name;  // registry name or "custom"
  SplitKind kind = SplitKind::ratio;
  std::size_t channels = 0;
  std::size_t rows = 0;  // rows actually used (post protocol truncation)
  SplitBounds bounds;
  std::vector<double> standardized;  // [c * rows + t]
  std::vector<double> mean, stddev;  // train statistics per channel
  std::vector<std::size_t> clamped_channels;  // zero train-variance channels

  const double* channel(std::size_t c) const { return standardized.data() + c * rows; }

  std::size_t split_begin(Split s) const {
    switch (s) {
      case Split::train: return 0;
      case Split::val: return bounds.train_end;
      default: return bounds.val_end;
    }
  }
  std::size_t split_end(Split s) const {
    switch (s) {
      case Split::train: return bounds.train_end;
      case Split::val: return bounds.val_end;
      default: return bounds.rows_used;
    }
  }
};

/// Builds a bundle from an in-memory (C, T) series. If `registry_name` names
/// a known benchmark, shape and split-table counts are verified against the
/// registry (a drift guard for provided benchmark files).
inline DatasetBundle make_bundle(std::vector<double> values, std::size_t channels,
                                 std::size_t rows, const std::string& registry_name) {
  DatasetBundle b;
  const DatasetInfo* info = find_dataset(registry_name);
  if (info) {
    if (channels != info->channels) {
      throw DataError("dataset '" + info->name + "': expected " +
                      std::to_string(info->channels) + " channels, file has " +
                      std::to_string(channels));
    }
    if (rows != info->rows) {
      throw DataError("dataset '" + info->name + "': expected " +
                      std::to_string(info->rows) + " rows, file has " +
                      std::to_string(rows));
    }
    b.kind = info->kind;
    b.name = info->name;
  } else {
    b.kind = SplitKind::ratio;
    b.name = registry_name.empty() ? "custom" : registry_name;
  }
  b.bounds = chronological_bounds(b.kind, rows);
  if (info) {
    const auto counts = table_window_counts(b.bounds);
    if (counts != info->table_windows) {
      throw DataError("dataset '" + info->name + "': split window counts (" +
                      std::to_string(counts[0]) + ", " + std::to_string(counts[1]) +
                      ", " + std::to_string(counts[2]) + ") do not match the " +
                      "registry table");
    }
  }
  b.channels = channels;
  b.rows = b.bounds.rows_used;

  // Standardise with train statistics only (population std, clamped if 0).
  b.mean.resize(channels);
  b.stddev.resize(channels);
  b.standardized.resize(channels * b.rows);
  const std::size_t n_train = b.bounds.train_end;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = values.data() + c * rows;
    double mu = 0.0;
    for (std::size_t t = 0; t < n_train; ++t) mu += src[t];
    mu /= static_cast<double>(n_train);
    double var = 0.0;
    for (std::size_t t = 0; t < n_train; ++t) {
      const double d = src[t] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n_train);
    double sd = std::sqrt(var);
    if (sd == 0.0) {
      sd = 1.0;
      b.clamped_channels.push_back(c);
    }
    b.mean[c] = mu;
    b.stddev[c] = sd;
    double* dst = b.standardized.data() + c * b.rows;
    const double inv = 1.0 / sd;
    for (std::size_t t = 0; t < b.rows; ++t) dst[t] = (src[t] - mu) * inv;
  }
  return b;
}

/// Loads a CSV file into a bundle (registry-checked when the name is known).
inline DatasetBundle load_dataset(const std::string& path,
                                  const std::string& registry_name) {
  RawCsv csv = load_csv(path);
  return make_bundle(std::move(csv.values), csv.channels, csv.rows, registry_name);
}

// ---------------------------------------------------------------------------
// Window enumeration and batching
// ---------------------------------------------------------------------------

/// Absolute start offsets (first lookback row) of every usable window of the
/// split: train stays inside [0, train_end); val/test reach back `lookback`
/// rows over their left boundary. Count = S - L - H + 1 with S the split's
/// row count including that overlap.
inline std::vector<std::int64_t> window_starts(const DatasetBundle& b, Split split,
                                               std::size_t lookback,
                                               std::size_t horizon) {
  const std::size_t begin = b.split_begin(split);
  const std::size_t end = b.split_end(split);
  std::int64_t first;
  if (split == Split::train) {
    first = 0;
  } else {
    if (begin < lookback) {
      throw DataError("windows: split '" + std::string(split_name(split)) +
                      "' starts at row " + std::to_string(begin) +
                      " < lookback " + std::to_string(lookback));
    }
    first = static_cast<std::int64_t>(begin - lookback);
  }
  const std::int64_t last =
      static_cast<std::int64_t>(end) - static_cast<std::int64_t>(lookback) -
      static_cast<std::int64_t>(horizon);
  std::vector<std::int64_t> out;
  if (last < first) {
    throw DataError("windows: split '" + std::string(split_name(split)) +
                    "' too short for lookback " + std::to_string(lookback) +
                    " + horizon " + std::to_string(horizon));
  }
  out.reserve(static_cast<std::size_t>(last - first + 1));
  for (std::int64_t t = first; t <= last; ++t) out.push_back(t);
  return out;
}

/// One training/eval batch: inputs (B, C, L), targets (B, C, H).
template <typename T>
struct Batch {
  Tensor<T> inputs;
  Tensor<T> targets;
  std::vector<std::int64_t> t_starts;
};

template <typename T>
Batch<T> make_batch(const DatasetBundle& b, const std::int64_t* starts,
                    std::size_t count, std::size_t lookback, std::size_t horizon) {
  Batch<T> batch;
  batch.t_starts.assign(starts, starts + count);
  batch.inputs = Tensor<T>(Shape{count, b.channels, lookback});
  batch.targets = Tensor<T>(Shape{count, b.channels, horizon});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t t0 = static_cast<std::size_t>(starts[i]);
    for (std::size_t c = 0; c < b.channels; ++c) {
      const double* src = b.channel(c) + t0;
      T* in = batch.inputs.values().data() + (i * b.channels + c) * lookback;
      for (std::size_t k = 0; k < lookback; ++k) in[k] = static_cast<T>(src[k]);
      const double* fut = src + lookback;
      T* tg = batch.targets.values().data() + (i * b.channels + c) * horizon;
      for (std::size_t k = 0; k < horizon; ++k) tg[k] = static_cast<T>(fut[k]);
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t count = 0;
};

/// Streaming accumulator: elementwise double sums, one division at the end,
/// so partial batches weight correctly and results are order-deterministic.
struct MetricAccumulator {
  double sq_sum = 0.0;
  double abs_sum = 0.0;
  std::size_t n = 0;

  template <typename T>
  void add(std::span<const T> pred, std::span<const T> target) {
    if (pred.size() != target.size()) {
      throw ShapeError("metrics: prediction/target size mismatch");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
      sq_sum += d * d;
      abs_sum += std::abs(d);
    }
    n += pred.size();
  }

  Metrics finish() const {
    if (n == 0) throw UsageError("metrics: no elements accumulated");
    return {sq_sum / static_cast<double>(n), abs_sum / static_cast<double>(n), n};
  }
};

template <typename T>
double mse_value(std::span<const T> pred, std::span<const T> target) {
  MetricAccumulator acc;
  acc.add(pred, target);
  return acc.finish().mse;
}

template <typename T>
double mae_value(std::span<const T> pred, std::span<const T> target) {
  MetricAccumulator acc;
  acc.add(pred, target);
  return acc.finish().mae;
}

}  // namespace hpmixer
