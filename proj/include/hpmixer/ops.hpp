#pragma once

// Differentiable primitive operations.
//
// Every op computes its forward result eagerly and, when a tape is active and
// some input requires gradients, records one adjoint closure. Adjoints
// accumulate (+=) into input .grad buffers so tensors used in several places
// (residual connections, shared weights) sum their contributions. A closure
// whose output never reached the loss sees no gradient buffer and returns
// early. All loops are sequential => backward is bit-deterministic.
//
// Dense linear algebra (matmul forward/backward) is delegated to Eigen maps
// over the same row-major buffers; everything else is plain loops.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hpmixer/common.hpp"
#include "hpmixer/rng.hpp"
#include "hpmixer/tape.hpp"
#include "hpmixer/tensor.hpp"

namespace hpmixer {

namespace detail {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

/// Leading extent when viewing `shape` as (rows, last-axis).
inline std::size_t row_count(const Shape& shape) {
  if (shape.empty()) return 1;
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) rows *= shape[i];
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary / unary
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(Tensor<T> a, Tensor<T> b) {
  detail::check_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> sub(Tensor<T> a, Tensor<T> b) {
  detail::check_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> mul(Tensor<T> a, Tensor<T> b) {
  detail::check_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
    }
  });
  return out;
}

template <typename T>
Tensor<T> scale(Tensor<T> a, T factor) {
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * factor;
  detail::record_if_needed<T>({&a}, out, [a, out, factor]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto ga = a.grad();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
  return out;
}

/// a: (..., n), v: (n); broadcasts v over all leading axes (bias add).
template <typename T>
Tensor<T> add_rowvec(Tensor<T> a, Tensor<T> v) {
  if (a.rank() < 1 || v.rank() != 1 || a.shape().back() != v.dim(0)) {
    throw ShapeError("add_rowvec: incompatible shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(v.shape()));
  }
  const std::size_t n = v.dim(0);
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] + v[i];
  }
  detail::record_if_needed<T>({&a, &v}, out, [a, v, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (v.requires_grad()) {
      auto gv = v.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        for (std::size_t i = 0; i < n; ++i) gv[i] += gr[i];
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Broadcast over the last axis (rhs has trailing extent 1)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void check_lastdim(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  bool ok = a.rank() >= 1 && b.rank() == a.rank() && b.shape().back() == 1;
  if (ok) {
    for (std::size_t i = 0; i + 1 < a.rank(); ++i) {
      if (a.dim(i) != b.dim(i)) ok = false;
    }
  }
  if (!ok) {
    throw ShapeError(std::string(op) + ": expected rhs " + shape_str(b.shape()) +
                     " to equal lhs " + shape_str(a.shape()) +
                     " with trailing extent 1");
  }
}

}  // namespace detail

/// out[r, i] = a[r, i] + b[r]; b has shape (..., 1).
template <typename T>
Tensor<T> add_lastdim(Tensor<T> a, Tensor<T> b) {
  detail::check_lastdim(a, b, "add_lastdim");
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    const T bv = b[r];
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] + bv;
  }
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        T s = T(0);
        for (std::size_t i = 0; i < n; ++i) s += gr[i];
        gb[r] += s;
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> sub_lastdim(Tensor<T> a, Tensor<T> b) {
  detail::check_lastdim(a, b, "sub_lastdim");
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    const T bv = b[r];
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] - bv;
  }
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        T s = T(0);
        for (std::size_t i = 0; i < n; ++i) s += gr[i];
        gb[r] -= s;
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> mul_lastdim(Tensor<T> a, Tensor<T> b) {
  detail::check_lastdim(a, b, "mul_lastdim");
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    const T bv = b[r];
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] * bv;
  }
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        T* gar = ga.data() + r * n;
        const T bv = b[r];
        for (std::size_t i = 0; i < n; ++i) gar[i] += gr[i] * bv;
      }
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        const T* av = a.values().data() + r * n;
        T s = T(0);
        for (std::size_t i = 0; i < n; ++i) s += gr[i] * av[i];
        gb[r] += s;
      }
    }
  });
  return out;
}

template <typename T>
Tensor<T> div_lastdim(Tensor<T> a, Tensor<T> b) {
  detail::check_lastdim(a, b, "div_lastdim");
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    const T inv = T(1) / b[r];
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] * inv;
  }
  detail::record_if_needed<T>({&a, &b}, out, [a, b, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    if (a.requires_grad()) {
      auto ga = a.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        T* gar = ga.data() + r * n;
        const T inv = T(1) / b[r];
        for (std::size_t i = 0; i < n; ++i) gar[i] += gr[i] * inv;
      }
    }
    if (b.requires_grad()) {
      auto gb = b.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * n;
        const T* yv = out.values().data() + r * n;
        const T inv = T(1) / b[r];
        T s = T(0);
        // d/db (a/b) = -a/b^2 = -y/b
        for (std::size_t i = 0; i < n; ++i) s += gr[i] * yv[i];
        gb[r] -= s * inv;
      }
    }
  });
  return out;
}

/// Per-position mean over the last axis, keeping it as extent 1.
template <typename T>
Tensor<T> mean_lastdim(Tensor<T> a) {
  if (a.rank() < 1) throw ShapeError("mean_lastdim: rank-0 input");
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Shape out_shape = a.shape();
  out_shape.back() = 1;
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) s += av[i];
    out[r] = s / static_cast<T>(n);
  }
  detail::record_if_needed<T>({&a}, out, [a, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto ga = a.grad();
    const T inv = T(1) / static_cast<T>(n);
    for (std::size_t r = 0; r < rows; ++r) {
      const T gr = g[r] * inv;
      T* gar = ga.data() + r * n;
      for (std::size_t i = 0; i < n; ++i) gar[i] += gr;
    }
  });
  return out;
}

/// Elementwise sqrt(x + eps); eps > 0 keeps the derivative finite.
template <typename T>
Tensor<T> sqrt_shifted(Tensor<T> a, T eps) {
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(a[i] + eps);
  detail::record_if_needed<T>({&a}, out, [a, out]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto ga = a.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * (T(0.5) / out[i]);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(Tensor<T> a) {
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  Tensor<T> out = Tensor<T>::scalar(s);
  detail::record_if_needed<T>({&a}, out, [a, out]() mutable {
    if (!out.has_grad()) return;
    const T g = out.grad()[0];
    auto ga = a.grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
  return out;
}

template <typename T>
Tensor<T> mean_all(Tensor<T> a) {
  T s = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  const T inv = T(1) / static_cast<T>(a.size());
  Tensor<T> out = Tensor<T>::scalar(s * inv);
  detail::record_if_needed<T>({&a}, out, [a, out, inv]() mutable {
    if (!out.has_grad()) return;
    const T g = out.grad()[0] * inv;
    auto ga = a.grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
  return out;
}

/// Mean squared error between same-shape tensors (differentiable).
template <typename T>
Tensor<T> mse_loss(Tensor<T> pred, Tensor<T> target) {
  Tensor<T> diff = sub(pred, target);
  return mean_all(mul(diff, diff));
}

// ---------------------------------------------------------------------------
// Shape manipulation
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(Tensor<T> a, Shape new_shape) {
  if (numel(new_shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(new_shape) + " (element counts differ)");
  }
  Tensor<T> out = Tensor<T>::from(std::move(new_shape), a.value_vec());
  detail::record_if_needed<T>({&a}, out, [a, out]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto ga = a.grad();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return out;
}

namespace detail {

inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

/// Maps output linear index -> input linear index for a permutation.
inline std::vector<std::size_t> permute_index_map(const Shape& in_shape,
                                                  const std::vector<std::size_t>& axes) {
  Shape out_shape(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = in_shape[axes[i]];
  const auto in_strides = row_major_strides(in_shape);
  const std::size_t n = numel(in_shape);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t o = 0; o < n; ++o) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) src += idx[i] * in_strides[axes[i]];
    map[o] = src;
    // Increment the multi-index in row-major order of the OUTPUT shape.
    for (std::size_t i = axes.size(); i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  return map;
}

}  // namespace detail

/// Axis permutation; `axes` lists, for each output axis, the source axis.
template <typename T>
Tensor<T> permute(Tensor<T> a, const std::vector<std::size_t>& axes) {
  if (axes.size() != a.rank()) {
    throw ShapeError("permute: axes count " + std::to_string(axes.size()) +
                     " does not match rank of " + shape_str(a.shape()));
  }
  std::vector<bool> seen(a.rank(), false);
  for (std::size_t ax : axes) {
    if (ax >= a.rank() || seen[ax]) {
      throw ShapeError("permute: invalid axis list for shape " + shape_str(a.shape()));
    }
    seen[ax] = true;
  }
  Shape out_shape(a.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = a.dim(axes[i]);
  auto map = detail::permute_index_map(a.shape(), axes);
  Tensor<T> out(out_shape);
  for (std::size_t o = 0; o < map.size(); ++o) out[o] = a[map[o]];
  detail::record_if_needed<T>({&a}, out,
                              [a, out, map = std::move(map)]() mutable {
                                if (!out.has_grad()) return;
                                auto g = out.grad();
                                auto ga = a.grad();
                                for (std::size_t o = 0; o < map.size(); ++o) {
                                  ga[map[o]] += g[o];
                                }
                              });
  return out;
}

/// Swaps the last two axes.
template <typename T>
Tensor<T> transpose_last(Tensor<T> a) {
  if (a.rank() < 2) throw ShapeError("transpose_last: rank must be >= 2");
  std::vector<std::size_t> axes(a.rank());
  for (std::size_t i = 0; i < a.rank(); ++i) axes[i] = i;
  std::swap(axes[a.rank() - 1], axes[a.rank() - 2]);
  return permute(a, axes);
}

// ---------------------------------------------------------------------------
// Matrix multiplication
// ---------------------------------------------------------------------------

/// a: (B..., n, k) times b: (k, m) [shared] or (B..., k, m) [batched].
template <typename T>
Tensor<T> matmul(Tensor<T> a, Tensor<T> b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError("matmul: both operands need rank >= 2, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const bool shared_rhs = b.rank() == 2;
  if (!shared_rhs) {
    if (b.rank() != a.rank()) {
      throw ShapeError("matmul: rhs must be rank-2 or match lhs rank, got " +
                       shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    for (std::size_t i = 0; i + 2 < a.rank(); ++i) {
      if (a.dim(i) != b.dim(i)) {
        throw ShapeError("matmul: batch dims differ, " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
      }
    }
  }
  const std::size_t n = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t bk = b.dim(b.rank() - 2);
  const std::size_t m = b.dim(b.rank() - 1);
  if (k != bk) {
    throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  std::size_t batches = 1;
  for (std::size_t i = 0; i + 2 < a.rank(); ++i) batches *= a.dim(i);

  Shape out_shape(a.shape());
  out_shape.back() = m;
  Tensor<T> out(out_shape);

  using detail::ECMap;
  using detail::EMap;
  for (std::size_t bi = 0; bi < batches; ++bi) {
    ECMap<T> A(a.values().data() + bi * n * k, n, k);
    ECMap<T> B(b.values().data() + (shared_rhs ? 0 : bi * k * m), k, m);
    EMap<T> C(out.values().data() + bi * n * m, n, m);
    C.noalias() = A * B;
  }

  detail::record_if_needed<T>(
      {&a, &b}, out, [a, b, out, batches, n, k, m, shared_rhs]() mutable {
        if (!out.has_grad()) return;
        using detail::ECMap;
        using detail::EMap;
        for (std::size_t bi = 0; bi < batches; ++bi) {
          ECMap<T> G(out.grad().data() + bi * n * m, n, m);
          if (a.requires_grad()) {
            ECMap<T> B(b.values().data() + (shared_rhs ? 0 : bi * k * m), k, m);
            EMap<T> GA(a.grad().data() + bi * n * k, n, k);
            GA.noalias() += G * B.transpose();
          }
          if (b.requires_grad()) {
            ECMap<T> A(a.values().data() + bi * n * k, n, k);
            EMap<T> GB(b.grad().data() + (shared_rhs ? 0 : bi * k * m), k, m);
            GB.noalias() += A.transpose() * G;
          }
        }
      });
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinearities / normalisation
// ---------------------------------------------------------------------------

/// Exact GELU: 0.5 x (1 + erf(x / sqrt(2))).
template <typename T>
Tensor<T> gelu(Tensor<T> a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(a[i]);
    out[i] = static_cast<T>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
  }
  detail::record_if_needed<T>({&a}, out, [a, out]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto ga = a.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = static_cast<double>(a[i]);
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ga[i] += g[i] * static_cast<T>(cdf + x * pdf);
    }
  });
  return out;
}

/// Softmax over the last axis (max-subtracted for stability).
template <typename T>
Tensor<T> softmax_lastdim(Tensor<T> a) {
  if (a.rank() < 1) throw ShapeError("softmax_lastdim: rank-0 input");
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    T mx = av[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, av[i]);
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      ov[i] = std::exp(av[i] - mx);
      s += ov[i];
    }
    const T inv = T(1) / s;
    for (std::size_t i = 0; i < n; ++i) ov[i] *= inv;
  }
  detail::record_if_needed<T>({&a}, out, [a, out, rows, n]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto ga = a.grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* gr = g.data() + r * n;
      const T* yv = out.values().data() + r * n;
      T dot = T(0);
      for (std::size_t i = 0; i < n; ++i) dot += gr[i] * yv[i];
      T* gar = ga.data() + r * n;
      for (std::size_t i = 0; i < n; ++i) gar[i] += yv[i] * (gr[i] - dot);
    }
  });
  return out;
}

/// Layer normalisation over the last axis with learnable affine (gamma, beta).
/// Uses the biased variance; eps keeps constant slices finite (output = beta).
template <typename T>
Tensor<T> layer_norm(Tensor<T> x, Tensor<T> gamma,
                     Tensor<T> beta, T eps = T(1e-6)) {
  if (x.rank() < 1 || gamma.rank() != 1 || beta.rank() != 1 ||
      gamma.dim(0) != x.shape().back() || beta.dim(0) != x.shape().back()) {
    throw ShapeError("layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " must match last axis of " +
                     shape_str(x.shape()));
  }
  const std::size_t n = x.shape().back();
  const std::size_t rows = detail::row_count(x.shape());
  Tensor<T> out(x.shape());
  // Saved statistics for the adjoint.
  auto mean = std::make_shared<std::vector<T>>(rows);
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xv = x.values().data() + r * n;
    T mu = T(0);
    for (std::size_t i = 0; i < n; ++i) mu += xv[i];
    mu /= static_cast<T>(n);
    T var = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = xv[i] - mu;
      var += d * d;
    }
    var /= static_cast<T>(n);
    const T is = T(1) / std::sqrt(var + eps);
    (*mean)[r] = mu;
    (*inv_std)[r] = is;
    T* ov = out.values().data() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      ov[i] = (xv[i] - mu) * is * gamma[i] + beta[i];
    }
  }
  detail::record_if_needed<T>(
      {&x, &gamma, &beta}, out,
      [x, gamma, beta, out, rows, n, mean, inv_std]() mutable {
        if (!out.has_grad()) return;
        auto g = out.grad();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* gr = g.data() + r * n;
          const T* xv = x.values().data() + r * n;
          const T mu = (*mean)[r];
          const T is = (*inv_std)[r];
          if (gamma.requires_grad()) {
            auto gg = gamma.grad();
            for (std::size_t i = 0; i < n; ++i) {
              gg[i] += gr[i] * (xv[i] - mu) * is;
            }
          }
          if (beta.requires_grad()) {
            auto gb = beta.grad();
            for (std::size_t i = 0; i < n; ++i) gb[i] += gr[i];
          }
          if (x.requires_grad()) {
            // dxhat_i = g_i * gamma_i;
            // dx = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
            T mean_dxhat = T(0);
            T mean_dxhat_xhat = T(0);
            for (std::size_t i = 0; i < n; ++i) {
              const T xhat = (xv[i] - mu) * is;
              const T dxhat = gr[i] * gamma[i];
              mean_dxhat += dxhat;
              mean_dxhat_xhat += dxhat * xhat;
            }
            mean_dxhat /= static_cast<T>(n);
            mean_dxhat_xhat /= static_cast<T>(n);
            auto gx = x.grad();
            T* gxr = gx.data() + r * n;
            for (std::size_t i = 0; i < n; ++i) {
              const T xhat = (xv[i] - mu) * is;
              const T dxhat = gr[i] * gamma[i];
              gxr[i] += is * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
            }
          }
        }
      });
  return out;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

/// Inverted dropout with a counter-based mask: element i of call `call` on
/// stream `stream` is kept iff counter_uniform(seed, stream, call, i) >= p.
/// Identity (returns the input handle) when not training or p == 0.
template <typename T>
Tensor<T> dropout(Tensor<T> x, T p, bool training, std::uint64_t seed,
                  std::uint64_t stream, std::uint64_t call) {
  if (!(p >= T(0) && p < T(1))) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == T(0)) return x;
  const std::size_t n = x.size();
  const T keep_scale = T(1) / (T(1) - p);
  auto mask = std::make_shared<std::vector<T>>(n);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const bool keep = counter_uniform(seed, stream, call, i) >= static_cast<double>(p);
    (*mask)[i] = keep ? keep_scale : T(0);
    out[i] = x[i] * (*mask)[i];
  }
  detail::record_if_needed<T>({&x}, out, [x, out, mask]() mutable {
    if (!out.has_grad()) return;
    auto g = out.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Circular dilated convolution / correlation
// ---------------------------------------------------------------------------

enum class ConvOrient {
  causal,      // y[t] = sum_k x[(t - d*k) mod L] * f[k]
  anticausal,  // y[t] = sum_k x[(t + d*k) mod L] * f[k]
};

/// Circular 1-D convolution along the last axis with dilation d.
/// x: (..., L), filter: (K). Requires d*(K-1) < L (filter support fits).
template <typename T>
Tensor<T> conv1d_circular(Tensor<T> x, Tensor<T> filter,
                          std::size_t dilation,
                          ConvOrient orient = ConvOrient::causal) {
  if (x.rank() < 1 || filter.rank() != 1) {
    throw ShapeError("conv1d_circular: need signal (..., L) and filter (K), got " +
                     shape_str(x.shape()) + " and " + shape_str(filter.shape()));
  }
  if (dilation == 0) throw ConfigError("conv1d_circular: dilation must be >= 1");
  const std::size_t L = x.shape().back();
  const std::size_t K = filter.dim(0);
  if (dilation * (K - 1) >= L) {
    throw ConfigError("conv1d_circular: dilated filter support " +
                      std::to_string(dilation * (K - 1) + 1) +
                      " exceeds signal length " + std::to_string(L));
  }
  const std::size_t rows = detail::row_count(x.shape());
  const bool causal = orient == ConvOrient::causal;
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xv = x.values().data() + r * L;
    T* ov = out.values().data() + r * L;
    std::fill(ov, ov + L, T(0));
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t off = dilation * k;
      const T fk = filter[k];
      if (causal) {
        // source index (t - off) mod L
        for (std::size_t t = 0; t < L; ++t) {
          const std::size_t src = t >= off ? t - off : t + L - off;
          ov[t] += xv[src] * fk;
        }
      } else {
        for (std::size_t t = 0; t < L; ++t) {
          const std::size_t src = t + off < L ? t + off : t + off - L;
          ov[t] += xv[src] * fk;
        }
      }
    }
  }
  detail::record_if_needed<T>(
      {&x, &filter}, out, [x, filter, out, rows, L, K, dilation, causal]() mutable {
        if (!out.has_grad()) return;
        auto g = out.grad();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* gr = g.data() + r * L;
          if (x.requires_grad()) {
            auto gx = x.grad();
            T* gxr = gx.data() + r * L;
            for (std::size_t k = 0; k < K; ++k) {
              const std::size_t off = dilation * k;
              const T fk = filter[k];
              if (causal) {
                // x[src] fed y[t] with src = t - off => dx[s] += g[(s+off) % L] f[k]
                for (std::size_t s = 0; s < L; ++s) {
                  const std::size_t t = s + off < L ? s + off : s + off - L;
                  gxr[s] += gr[t] * fk;
                }
              } else {
                for (std::size_t s = 0; s < L; ++s) {
                  const std::size_t t = s >= off ? s - off : s + L - off;
                  gxr[s] += gr[t] * fk;
                }
              }
            }
          }
          if (filter.requires_grad()) {
            auto gf = filter.grad();
            const T* xv = x.values().data() + r * L;
            for (std::size_t k = 0; k < K; ++k) {
              const std::size_t off = dilation * k;
              T s = T(0);
              if (causal) {
                for (std::size_t t = 0; t < L; ++t) {
                  const std::size_t src = t >= off ? t - off : t + L - off;
                  s += gr[t] * xv[src];
                }
              } else {
                for (std::size_t t = 0; t < L; ++t) {
                  const std::size_t src = t + off < L ? t + off : t + off - L;
                  s += gr[t] * xv[src];
                }
              }
              gf[k] += s;
            }
          }
        }
      });
  return out;
}

// ---------------------------------------------------------------------------
// Cycle bank gather
// ---------------------------------------------------------------------------

/// Gathers length-`length` phase-aligned slices from a (W, C) cycle bank:
/// out[b, c, i] = bank[(t_starts[b] + i) mod W, c]. Adjoint scatter-adds.
template <typename T>
Tensor<T> cycle_gather(Tensor<T> bank, const std::vector<std::int64_t>& t_starts,
                       std::size_t length) {
  if (bank.rank() != 2) {
    throw ShapeError("cycle_gather: bank must be (W, C), got " + shape_str(bank.shape()));
  }
  if (length == 0) throw ConfigError("cycle_gather: length must be >= 1");
  if (t_starts.empty()) throw ConfigError("cycle_gather: need at least one start index");
  const std::size_t W = bank.dim(0);
  const std::size_t C = bank.dim(1);
  const std::size_t B = t_starts.size();
  Tensor<T> out(Shape{B, C, length});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t row = pos_mod(t_starts[b] + static_cast<std::int64_t>(i), W);
      const T* bank_row = bank.values().data() + row * C;
      T* ov = out.values().data() + (b * C) * length + i;
      for (std::size_t c = 0; c < C; ++c) ov[c * length] = bank_row[c];
    }
  }
  detail::record_if_needed<T>(
      {&bank}, out, [bank, out, t_starts, length, W, C, B]() mutable {
        if (!out.has_grad()) return;
        auto g = out.grad();
        auto gb = bank.grad();
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t i = 0; i < length; ++i) {
            const std::size_t row = pos_mod(t_starts[b] + static_cast<std::int64_t>(i), W);
            T* bank_row = gb.data() + row * C;
            const T* gv = g.data() + (b * C) * length + i;
            for (std::size_t c = 0; c < C; ++c) bank_row[c] += gv[c * length];
          }
        }
      });
  return out;
}

// ---------------------------------------------------------------------------
// Non-differentiable helpers
// ---------------------------------------------------------------------------

/// Circular left-rotation by `shift` along the last axis (no gradient).
template <typename T>
Tensor<T> rotate_lastdim(Tensor<T> a, std::int64_t shift) {
  const std::size_t n = a.shape().back();
  const std::size_t rows = detail::row_count(a.shape());
  Tensor<T> out(a.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* av = a.values().data() + r * n;
    T* ov = out.values().data() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      ov[i] = av[pos_mod(static_cast<std::int64_t>(i) + shift, n)];
    }
  }
  return out;
}

}  // namespace hpmixer
