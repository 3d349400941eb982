#pragma once

// Reverse-mode gradient tape.
//
// Ops executed while a Tape<T> is active (see Tape::Scope) push one adjoint
// closure each. backward(loss) seeds d(loss)/d(loss)=1, replays the closures
// in reverse execution order, then clears the tape. The graph is dynamic:
// it is rebuilt every forward pass, so control flow may differ between steps.
// Everything is single-threaded and sequential, hence bit-deterministic.

#include <functional>
#include <vector>

#include "hpmixer/common.hpp"
#include "hpmixer/tensor.hpp"

namespace hpmixer {

template <typename T>
class Tape {
 public:
  using AdjointFn = std::function<void()>;

  void record(AdjointFn fn) { records_.push_back(std::move(fn)); }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  void clear() { records_.clear(); }

  /// The tape ops currently record onto (nullptr => pure inference).
  static Tape*& active() {
    thread_local Tape* current = nullptr;
    return current;
  }

  /// RAII activation; restores the previous tape on destruction.
  class Scope {
   public:
    explicit Scope(Tape& tape) : previous_(active()) { active() = &tape; }
    ~Scope() { active() = previous_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  /// Seeds loss.grad = 1, replays adjoints newest-first, clears the tape.
  void backward(Tensor<T> loss) {
    if (records_.empty()) {
      throw UsageError("backward: tape is empty (no recorded operations)");
    }
    if (loss.size() != 1) {
      throw UsageError("backward: loss must be scalar, got shape " +
                       shape_str(loss.shape()));
    }
    loss.ensure_grad();
    loss.grad()[0] = T(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
    clear();
  }

 private:
  std::vector<AdjointFn> records_;
};

/// Runs backward on the active tape. Errors if none is active.
template <typename T>
void backward(Tensor<T> loss) {
  Tape<T>* tape = Tape<T>::active();
  if (!tape) throw UsageError("backward: no active tape in scope");
  tape->backward(std::move(loss));
}

namespace detail {

/// Records a closure if recording is on and any input needs gradients.
/// Marks the output as requiring grad so downstream ops keep recording.
template <typename T>
void record_if_needed(std::initializer_list<const Tensor<T>*> inputs,
                      Tensor<T>& out, std::function<void()> adjoint) {
  Tape<T>* tape = Tape<T>::active();
  if (!tape) return;
  bool needed = false;
  for (const Tensor<T>* in : inputs) {
    if (in->requires_grad()) {
      needed = true;
      break;
    }
  }
  if (!needed) return;
  out.set_requires_grad(true);
  tape->record(std::move(adjoint));
}

}  // namespace detail

}  // namespace hpmixer
