#pragma once

// Named parameter registry.
//
// Model components register their tensors (in declaration order) under
// hierarchical dotted names. The fixed order is what makes checkpoints
// byte-stable and the optimizer walk deterministic. Frozen entries keep
// their slot (total count unchanged) but are skipped by the optimizer.

#include <cstddef>
#include <string>
#include <vector>

#include "hpmixer/common.hpp"
#include "hpmixer/tensor.hpp"

namespace hpmixer {

template <typename T>
class ParamRegistry {
 public:
  struct Entry {
    std::string name;
    Tensor<T> tensor;
    bool trainable = true;
  };

  Tensor<T>& add(std::string name, Tensor<T> tensor, bool trainable = true) {
    for (const auto& e : entries_) {
      if (e.name == name) {
        throw UsageError("param registry: duplicate name '" + name + "'");
      }
    }
    tensor.set_requires_grad(trainable);
    entries_.push_back(Entry{std::move(name), std::move(tensor), trainable});
    return entries_.back().tensor;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Total element count over every registered tensor (frozen included).
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  /// Element count over trainable tensors only.
  std::size_t trainable_parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
      if (e.trainable) n += e.tensor.size();
    }
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  /// Snapshot of all parameter values (for best-epoch restore).
  std::vector<std::vector<T>> snapshot_values() const {
    std::vector<std::vector<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
      out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
    }
    return out;
  }

  void restore_values(const std::vector<std::vector<T>>& snap) {
    if (snap.size() != entries_.size()) {
      throw UsageError("param registry: snapshot entry count mismatch");
    }
    for (std::size_t i = 0; i < snap.size(); ++i) {
      if (snap[i].size() != entries_[i].tensor.size()) {
        throw UsageError("param registry: snapshot size mismatch at '" +
                         entries_[i].name + "'");
      }
      std::copy(snap[i].begin(), snap[i].end(), entries_[i].tensor.values().begin());
    }
  }

  const Entry* find(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  Entry* find(const std::string& name) {
    for (auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

 private:
  std::vector<Entry> entries_;
};

/// Convenience alias mirroring the registry's "count every parameter" view.
template <typename T>
std::size_t count_params(const ParamRegistry<T>& params) {
  return params.parameter_count();
}

}  // namespace hpmixer
