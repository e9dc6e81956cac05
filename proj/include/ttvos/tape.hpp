#pragma once

#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "ttvos/tensor.hpp"

namespace ttvos {

/// Ordered record of differentiable operations.
///
/// Operations executed while a tape is active on the current thread (see
/// TapeScope) append a node whenever one of their inputs requires a
/// gradient. backward() walks the nodes in exact reverse order of recording
/// and may run only once per recording; clear() resets the tape for reuse.
/// A tape is single-owner. Separate threads may each drive their own tape.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(std::string_view op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable tensor that
  /// requires a gradient. Leaf gradients accumulate across calls.
  void backward(const Tensor& loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  /// Names of recorded ops in order; used by tests that check replay order.
  std::vector<std::string_view> op_names() const;
  /// Record of the node indices visited by the most recent backward().
  const std::vector<std::size_t>& last_backward_order() const { return visit_order_; }

 private:
  struct Node {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::vector<std::size_t> visit_order_;
  bool consumed_ = false;
};

Tape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Temporarily suspends recording (e.g. for recurrent state that must not
/// carry gradient into the next frame).
class NoTapeScope {
 public:
  NoTapeScope();
  ~NoTapeScope();
  NoTapeScope(const NoTapeScope&) = delete;
  NoTapeScope& operator=(const NoTapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Returns the active tape if any of `inputs` requires a gradient.
Tape* recording_tape(std::initializer_list<const Tensor*> inputs);
Tape* recording_tape(const std::vector<Tensor>& inputs);

/// backward() on the tape active on this thread.
void backward(const Tensor& loss);

}  // namespace ttvos
