#pragma once

// Dense row-major tensor with optional gradient storage.
//
// Tensor<T> is a cheap shared handle: copies alias the same storage, which is
// what the reverse-mode tape needs (backward lambdas capture handles and
// accumulate into the shared .grad buffer). T is float or double; tests run
// the same graph code in 64-bit for finite-difference comparisons.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "hpmixer/common.hpp"
#include "hpmixer/rng.hpp"

namespace hpmixer {

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty until ensure_grad(); same length as values after
  bool requires_grad = false;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;  // undefined handle

  explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false)
      : data_(std::make_shared<TensorStorage<T>>()) {
    data_->shape = std::move(shape);
    data_->values.assign(numel(data_->shape), fill);
    data_->requires_grad = requires_grad;
  }

  static Tensor from(Shape shape, std::vector<T> values) {
    if (numel(shape) != values.size()) {
      throw ShapeError("tensor: value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.data_ = std::make_shared<TensorStorage<T>>();
    t.data_->shape = std::move(shape);
    t.data_->values = std::move(values);
    return t;
  }

  static Tensor scalar(T v) { return from({}, {v}); }

  /// i.i.d. N(0, scale^2) entries.
  static Tensor randn(Shape shape, Rng& rng, T scale = T(1)) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(rng.normal()) * scale;
    return t;
  }

  /// i.i.d. U(lo, hi) entries.
  static Tensor rand_uniform(Shape shape, Rng& rng, T lo, T hi) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t size() const { return data_->values.size(); }
  std::size_t dim(std::size_t axis) const { return data_->shape[axis]; }

  std::span<T> values() { return data_->values; }
  std::span<const T> values() const { return data_->values; }
  std::vector<T>& value_vec() { return data_->values; }
  const std::vector<T>& value_vec() const { return data_->values; }

  T& operator[](std::size_t i) { return data_->values[i]; }
  const T& operator[](std::size_t i) const { return data_->values[i]; }

  T& at(std::size_t i, std::size_t j) { return data_->values[i * dim(1) + j]; }
  const T& at(std::size_t i, std::size_t j) const {
    return data_->values[i * dim(1) + j];
  }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_->values[(i * dim(1) + j) * dim(2) + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_->values[(i * dim(1) + j) * dim(2) + k];
  }

  bool requires_grad() const { return data_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    data_->requires_grad = b;
    return *this;
  }

  bool has_grad() const { return !data_->grad.empty(); }

  /// Allocates (zero-filled) gradient storage on first use.
  void ensure_grad() {
    if (data_->grad.empty()) data_->grad.assign(data_->values.size(), T(0));
  }

  std::span<T> grad() {
    ensure_grad();
    return data_->grad;
  }
  std::span<const T> grad() const { return data_->grad; }

  void zero_grad() {
    if (!data_->grad.empty()) data_->grad.assign(data_->values.size(), T(0));
  }

  /// Storage identity (aliasing test), not value equality.
  bool same_storage(const Tensor& other) const { return data_ == other.data_; }

  /// Deep copy of values (gradients are not copied).
  Tensor clone() const {
    Tensor t;
    t.data_ = std::make_shared<TensorStorage<T>>();
    t.data_->shape = data_->shape;
    t.data_->values = data_->values;
    t.data_->requires_grad = data_->requires_grad;
    return t;
  }

  TensorStorage<T>* storage() const { return data_.get(); }

 private:
  std::shared_ptr<TensorStorage<T>> data_;
};

}  // namespace hpmixer
