#pragma once

// Two-level non-overlapping patching.
//
// Because patches are contiguous and non-overlapping, every (un)patch is a
// pure reshape of the row-major buffer: bit-exact, gradient-transparent, and
// the flatten-to-(N_co*P_co) view used by the coarse mixer is the same
// buffer again. The only real logic is divisibility validation.

#include <cstddef>
#include <string>
#include <vector>

#include "hpmixer/ops.hpp"

namespace hpmixer {

/// Canonical patch-size choices (used for validation hints and search).
inline const std::vector<std::size_t>& patch_size_choices() {
  static const std::vector<std::size_t> sizes{4, 8, 12, 16, 24, 32, 48};
  return sizes;
}

struct PatchSpec {
  std::size_t len = 0;          // L: sequence length being patched
  std::size_t coarse_len = 0;   // P_co
  std::size_t fine_len = 0;     // P_fi
  std::size_t n_coarse = 0;     // N_co = L / P_co
  std::size_t n_fine = 0;       // N_fi = P_co / P_fi
};

namespace detail {

inline std::string divisor_choices_str(std::size_t len) {
  std::string s;
  for (std::size_t p : patch_size_choices()) {
    if (len % p == 0) {
      if (!s.empty()) s += ", ";
      s += std::to_string(p);
    }
  }
  return s.empty() ? "(none of the canonical sizes divide " + std::to_string(len) + ")"
                   : s;
}

}  // namespace detail

/// Validates divisibility and derives patch counts.
/// fine_len == 0 picks the default: coarse_len/2 when even, else coarse_len.
inline PatchSpec make_patch_spec(std::size_t len, std::size_t coarse_len,
                                 std::size_t fine_len = 0) {
  if (len == 0 || coarse_len == 0) {
    throw ConfigError("patching: lengths must be positive");
  }
  if (len % coarse_len != 0) {
    throw ConfigError("patch_len_coarse: " + std::to_string(coarse_len) +
                      " does not divide lookback " + std::to_string(len) +
                      "; valid choices: " + detail::divisor_choices_str(len));
  }
  if (fine_len == 0) {
    fine_len = coarse_len % 2 == 0 ? coarse_len / 2 : coarse_len;
  }
  if (coarse_len % fine_len != 0) {
    throw ConfigError("patch_len_fine: " + std::to_string(fine_len) +
                      " does not divide patch_len_coarse " +
                      std::to_string(coarse_len) +
                      "; valid choices: " + detail::divisor_choices_str(coarse_len));
  }
  PatchSpec spec;
  spec.len = len;
  spec.coarse_len = coarse_len;
  spec.fine_len = fine_len;
  spec.n_coarse = len / coarse_len;
  spec.n_fine = coarse_len / fine_len;
  return spec;
}

/// (..., L) -> (..., N_co, P_co)
template <typename T>
Tensor<T> patch_coarse(Tensor<T> x, const PatchSpec& spec) {
  if (x.shape().back() != spec.len) {
    throw ShapeError("patch_coarse: last axis " + shape_str(x.shape()) +
                     " != expected length " + std::to_string(spec.len));
  }
  Shape s = x.shape();
  s.back() = spec.n_coarse;
  s.push_back(spec.coarse_len);
  return reshape(std::move(x), s);
}

/// (..., N_co, P_co) -> (..., L)
template <typename T>
Tensor<T> unpatch_coarse(Tensor<T> x, const PatchSpec& spec) {
  if (x.rank() < 2 || x.dim(x.rank() - 2) != spec.n_coarse ||
      x.shape().back() != spec.coarse_len) {
    throw ShapeError("unpatch_coarse: expected (..., " +
                     std::to_string(spec.n_coarse) + ", " +
                     std::to_string(spec.coarse_len) + "), got " +
                     shape_str(x.shape()));
  }
  Shape s = x.shape();
  s.pop_back();
  s.back() = spec.len;
  return reshape(std::move(x), s);
}

/// (..., N_co, P_co) -> (..., N_co, N_fi, P_fi)
template <typename T>
Tensor<T> patch_fine(Tensor<T> x, const PatchSpec& spec) {
  if (x.shape().back() != spec.coarse_len) {
    throw ShapeError("patch_fine: last axis " + shape_str(x.shape()) +
                     " != patch_len_coarse " + std::to_string(spec.coarse_len));
  }
  Shape s = x.shape();
  s.back() = spec.n_fine;
  s.push_back(spec.fine_len);
  return reshape(std::move(x), s);
}

/// (..., N_co, N_fi, P_fi) -> (..., N_co, P_co)
template <typename T>
Tensor<T> unpatch_fine(Tensor<T> x, const PatchSpec& spec) {
  if (x.rank() < 2 || x.dim(x.rank() - 2) != spec.n_fine ||
      x.shape().back() != spec.fine_len) {
    throw ShapeError("unpatch_fine: expected (..., " + std::to_string(spec.n_fine) +
                     ", " + std::to_string(spec.fine_len) + "), got " +
                     shape_str(x.shape()));
  }
  Shape s = x.shape();
  s.pop_back();
  s.back() = spec.coarse_len;
  return reshape(std::move(x), s);
}

}  // namespace hpmixer
