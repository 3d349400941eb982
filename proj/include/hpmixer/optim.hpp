#pragma once

// Adam optimizer with bias correction.
//
// Moment buffers are held per registry entry (zero at step 0); the shared
// step counter advances by exactly one per update() call. Frozen entries are
// skipped entirely. Updates are plain sequential loops => deterministic.

#include <cmath>
#include <cstddef>
#include <vector>

#include "hpmixer/params.hpp"

namespace hpmixer {

template <typename T>
class Adam {
 public:
  explicit Adam(ParamRegistry<T>& params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params.entries()[i].tensor.size(), T(0));
      v_[i].assign(params.entries()[i].tensor.size(), T(0));
    }
  }

  std::size_t step() const { return step_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  /// One Adam update from the gradients currently in the registry.
  void update() {
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
      auto& entry = params_.entries()[p];
      if (!entry.trainable) continue;
      entry.tensor.ensure_grad();
      auto g = entry.tensor.grad();
      auto w = entry.tensor.values();
      auto& m = m_[p];
      auto& v = v_[p];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m[i] = static_cast<T>(beta1_ * m[i] + (1.0 - beta1_) * gi);
        v[i] = static_cast<T>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
        const double mhat = static_cast<double>(m[i]) / bc1;
        const double vhat = static_cast<double>(v[i]) / bc2;
        w[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

 private:
  ParamRegistry<T>& params_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

}  // namespace hpmixer
