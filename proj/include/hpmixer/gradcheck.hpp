#pragma once

// Central finite-difference gradient verification.
//
// grad_check evaluates a scalar-valued function twice per perturbed element
// (x ± eps, no tape active) and compares against the reverse-mode gradient
// from one taped evaluation. Relative error uses a floor so near-zero
// gradients do not explode the ratio. Intended for T = double; the dropout
// sites inside f must run in eval mode so f is deterministic.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hpmixer/ops.hpp"
#include "hpmixer/tape.hpp"
#include "hpmixer/tensor.hpp"

namespace hpmixer {

template <typename T>
struct GradCheckResult {
  T max_rel_err = T(0);
  std::size_t worst_input = 0;    // which checked tensor
  std::size_t worst_element = 0;  // flat element index within it
  T analytic_at_worst = T(0);
  T numeric_at_worst = T(0);
  bool ok(T tol) const { return max_rel_err < tol; }
};

/// Compares reverse-mode gradients of f with central finite differences.
/// `f` must rebuild its graph from `inputs` on every call (values are
/// perturbed in place). Gradients are checked for every tensor in `inputs`;
/// all of them get requires_grad set.
template <typename T, typename F>
GradCheckResult<T> grad_check(F&& f, std::vector<Tensor<T>> inputs,
                              T eps = T(1e-5), T rel_floor = T(1e-3)) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }

  // Analytic pass.
  Tape<T> tape;
  {
    typename Tape<T>::Scope scope(tape);
    Tensor<T> loss = f(inputs);
    if (loss.size() != 1) {
      throw UsageError("grad_check: f must return a scalar, got shape " +
                       shape_str(loss.shape()));
    }
    tape.backward(loss);
  }
  std::vector<std::vector<T>> analytic;
  analytic.reserve(inputs.size());
  for (auto& in : inputs) {
    in.ensure_grad();
    analytic.emplace_back(in.grad().begin(), in.grad().end());
  }

  // Numeric pass (tape inactive => ops run pure forward).
  GradCheckResult<T> result;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto vals = inputs[t].values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const T saved = vals[i];
      vals[i] = saved + eps;
      const T up = f(inputs)[0];
      vals[i] = saved - eps;
      const T down = f(inputs)[0];
      vals[i] = saved;
      const T numeric = (up - down) / (T(2) * eps);
      const T a = analytic[t][i];
      const T denom = std::max({std::abs(a), std::abs(numeric), rel_floor});
      const T rel = std::abs(a - numeric) / denom;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_input = t;
        result.worst_element = i;
        result.analytic_at_worst = a;
        result.numeric_at_worst = numeric;
      }
    }
  }
  return result;
}

}  // namespace hpmixer
