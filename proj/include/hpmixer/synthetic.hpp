#pragma once

// Synthetic benchmark fixtures.
//
// Generates series with the exact (channels, rows) shape of the known
// benchmarks and a documented signal mix per channel:
//   * a sharp periodic component at the benchmark's dominant cycle
//     (random harmonics plus narrow bumps => the sample ACF peaks exactly
//     at the cycle length rather than at neighbouring lags),
//   * optionally a secondary shorter cycle (daily-inside-weekly),
//   * a slow multi-sine component (predictable from the lookback),
//   * i.i.d. Gaussian noise (the irreducible forecast floor).
// Component standard deviations are rescaled empirically so variance shares
// are controlled, then each channel gets an arbitrary offset/scale (undone
// by train-stats standardisation at load).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hpmixer/common.hpp"
#include "hpmixer/data.hpp"
#include "hpmixer/rng.hpp"

namespace hpmixer {

namespace detail {

/// Zero-mean, unit-variance cyclic shape: harmonics + narrow bumps.
inline std::vector<double> periodic_shape(std::size_t period, Rng& rng,
                                          std::size_t n_harmonics,
                                          std::size_t n_bumps) {
  std::vector<double> shape(period, 0.0);
  static const double amp_profile[] = {1.0, 0.8, 0.65, 0.5, 0.4, 0.3};
  for (std::size_t h = 1; h <= n_harmonics; ++h) {
    const double amp = amp_profile[h - 1] * rng.uniform(0.7, 1.3);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (std::size_t p = 0; p < period; ++p) {
      shape[p] += amp * std::sin(6.283185307179586 * static_cast<double>(h * p) /
                                     static_cast<double>(period) +
                                 phase);
    }
  }
  auto normalize = [](std::vector<double>& v) {
    double mu = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    double var = 0.0;
    for (double& x : v) {
      x -= mu;
      var += x * x;
    }
    var /= static_cast<double>(v.size());
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (double& x : v) x *= inv;
  };
  normalize(shape);

  if (n_bumps > 0) {
    std::vector<double> bumps(period, 0.0);
    for (std::size_t j = 0; j < n_bumps; ++j) {
      const double center = rng.uniform(0.0, static_cast<double>(period));
      const double width = rng.uniform(1.5, 3.5);
      const double height = rng.uniform(0.8, 1.6) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      for (std::size_t p = 0; p < period; ++p) {
        double d = std::abs(static_cast<double>(p) - center);
        d = std::min(d, static_cast<double>(period) - d);  // circular distance
        bumps[p] += height * std::exp(-0.5 * d * d / (width * width));
      }
    }
    normalize(bumps);
    const double wh = std::sqrt(0.5);
    for (std::size_t p = 0; p < period; ++p) {
      shape[p] = wh * shape[p] + wh * bumps[p];
    }
    normalize(shape);
  }
  return shape;
}

/// Rescales v (in place) to zero mean and standard deviation `target_sd`.
inline void rescale_to_sd(std::vector<double>& v, double target_sd) {
  double mu = 0.0;
  for (double x : v) mu += x;
  mu /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mu) * (x - mu);
  var /= static_cast<double>(v.size());
  const double scale = var > 0.0 ? target_sd / std::sqrt(var) : 0.0;
  for (double& x : v) x = (x - mu) * scale;
}

}  // namespace detail

struct SyntheticMix {
  std::size_t period = 96;         // dominant cycle
  std::size_t second_period = 0;   // optional shorter cycle (0 = none)
  double primary_share = 0.52;     // variance share of the dominant cycle
  double second_share = 0.0;
  double slow_share = 0.24;
  // noise takes the remainder
};

inline SyntheticMix benchmark_mix(const std::string& name) {
  SyntheticMix mix;
  if (name == "etth1" || name == "etth2") {
    mix.period = 24;
  } else if (name == "ettm1" || name == "ettm2") {
    mix.period = 96;
  } else if (name == "weather") {
    mix.period = 144;
  } else if (name == "ecl" || name == "traffic") {
    mix.period = 168;
    mix.second_period = 24;
    mix.primary_share = 0.40;
    mix.second_share = 0.20;
    mix.slow_share = 0.08;
  } else {
    throw ConfigError("synthetic: unknown benchmark name '" + name + "'");
  }
  return mix;
}

/// Generates a (channels, rows) series for the given mix, row-major.
inline std::vector<double> synth_series(const SyntheticMix& mix, std::size_t channels,
                                        std::size_t rows, std::uint64_t seed) {
  std::vector<double> out(channels * rows);
  const double noise_share =
      1.0 - mix.primary_share - mix.second_share - mix.slow_share;
  for (std::size_t c = 0; c < channels; ++c) {
    Rng rng(key_combine(seed, 0x636831ull + c));
    const std::size_t n_harm = mix.period >= 96 ? 5 : 4;
    auto shape = detail::periodic_shape(mix.period, rng, n_harm,
                                        mix.period >= 96 ? 3 : 2);
    std::vector<double> second_shape;
    if (mix.second_period != 0) {
      second_shape = detail::periodic_shape(mix.second_period, rng, 4, 2);
    }
    // Slow component: two incommensurate sines, several cycles per split.
    const double p1 = static_cast<double>(mix.period) * rng.uniform(7.3, 8.9);
    const double p2 = static_cast<double>(mix.period) * rng.uniform(12.1, 14.3);
    const double ph1 = rng.uniform(0.0, 6.283185307179586);
    const double ph2 = rng.uniform(0.0, 6.283185307179586);
    std::vector<double> slow(rows);
    for (std::size_t t = 0; t < rows; ++t) {
      slow[t] = std::sin(6.283185307179586 * static_cast<double>(t) / p1 + ph1) +
                0.8 * std::sin(6.283185307179586 * static_cast<double>(t) / p2 + ph2);
    }
    detail::rescale_to_sd(slow, std::sqrt(mix.slow_share));

    const double sd_primary = std::sqrt(mix.primary_share);
    const double sd_second = std::sqrt(mix.second_share);
    const double sd_noise = std::sqrt(noise_share);
    const double offset = rng.uniform(-4.0, 4.0);
    const double channel_scale = rng.uniform(0.5, 2.0);

    double* dst = out.data() + c * rows;
    for (std::size_t t = 0; t < rows; ++t) {
      double v = sd_primary * shape[t % mix.period] + slow[t] +
                 sd_noise * rng.normal();
      if (mix.second_period != 0) {
        v += sd_second * second_shape[t % mix.second_period];
      }
      dst[t] = channel_scale * v + offset;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

namespace detail {

struct CivilClock {
  int year = 2016, month = 7, day = 1, hour = 0, minute = 0;

  void advance(int minutes) {
    static const int days_in[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    minute += minutes;
    hour += minute / 60;
    minute %= 60;
    day += hour / 24;
    hour %= 24;
    while (true) {
      const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
      const int dim = days_in[month - 1] + (month == 2 && leap ? 1 : 0);
      if (day <= dim) break;
      day -= dim;
      if (++month > 12) {
        month = 1;
        ++year;
      }
    }
  }

  std::string str() const {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:00", year, month, day,
                  hour, minute);
    return buf;
  }
};

}  // namespace detail

/// Writes a (channels, rows) series as a benchmark-style CSV with a leading
/// timestamp column stepping `step_minutes` per row.
inline void write_series_csv(const std::string& path, const std::vector<double>& series,
                             std::size_t channels, std::size_t rows, int step_minutes) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  out << "date";
  for (std::size_t c = 0; c < channels; ++c) out << ",c" << c;
  out << '\n';
  detail::CivilClock clock;
  std::string line;
  char buf[40];
  for (std::size_t t = 0; t < rows; ++t) {
    line.clear();
    line += clock.str();
    for (std::size_t c = 0; c < channels; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.6g", series[c * rows + t]);
      line += buf;
    }
    line += '\n';
    out << line;
    clock.advance(step_minutes);
  }
  if (!out) throw DataError("csv: write to '" + path + "' failed");
}

inline int benchmark_step_minutes(const std::string& name) {
  if (name == "ettm1" || name == "ettm2") return 15;
  if (name == "weather") return 10;
  return 60;
}

/// Writes (or reuses) a deterministic benchmark-shaped fixture CSV in `dir`.
/// Returns the file path.
inline std::string ensure_benchmark_fixture(const std::string& dir,
                                            const std::string& name,
                                            std::uint64_t seed = 7) {
  const DatasetInfo* info = find_dataset(name);
  if (!info) throw ConfigError("synthetic: '" + name + "' is not a known benchmark");
  std::filesystem::create_directories(dir);
  const std::string path =
      dir + "/" + name + "_s" + std::to_string(seed) + ".csv";
  if (std::filesystem::exists(path)) return path;
  const auto series = synth_series(benchmark_mix(name), info->channels, info->rows, seed);
  const std::string tmp = path + ".tmp";
  write_series_csv(tmp, series, info->channels, info->rows,
                   benchmark_step_minutes(name));
  std::filesystem::rename(tmp, path);
  return path;
}

/// Small custom fixture: `channels` noisy sinusoids of the given period.
inline void write_sine_csv(const std::string& path, std::size_t period,
                           std::size_t rows, std::size_t channels, double noise_sd,
                           std::uint64_t seed = 7) {
  std::vector<double> series(channels * rows);
  for (std::size_t c = 0; c < channels; ++c) {
    Rng rng(key_combine(seed, c));
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (std::size_t t = 0; t < rows; ++t) {
      series[c * rows + t] =
          std::sin(6.283185307179586 * static_cast<double>(t) /
                       static_cast<double>(period) +
                   phase) +
          noise_sd * rng.normal();
    }
  }
  write_series_csv(path, series, channels, rows, 60);
}

}  // namespace hpmixer
