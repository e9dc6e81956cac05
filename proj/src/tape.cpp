#include "ttvos/tape.hpp"

#include "ttvos/errors.hpp"

namespace ttvos {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

void Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor output,
                  BackwardFn fn) {
  if (consumed_) {
    throw UsageError("recording onto a tape that was already replayed; clear() it first");
  }
  output.set_requires_grad(true);
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw UsageError("backward replayed twice without re-recording");
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) throw UsageError("loss is not on the tape");
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  visit_order_.clear();
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.output.has_grad()) continue;  // not reachable from the loss
    visit_order_.push_back(i);
    node.backward();
  }
  consumed_ = true;
}

void Tape::clear() {
  nodes_.clear();
  visit_order_.clear();
  consumed_ = false;
}

std::vector<std::string_view> Tape::op_names() const {
  std::vector<std::string_view> names;
  names.reserve(nodes_.size());
  for (const auto& n : nodes_) names.push_back(n.op);
  return names;
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoTapeScope::NoTapeScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoTapeScope::~NoTapeScope() { g_active_tape = previous_; }

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  if (!g_active_tape) return nullptr;
  for (const Tensor* t : inputs) {
    if (t && t->requires_grad()) return g_active_tape;
  }
  return nullptr;
}

Tape* recording_tape(const std::vector<Tensor>& inputs) {
  if (!g_active_tape) return nullptr;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return g_active_tape;
  }
  return nullptr;
}

void backward(const Tensor& loss) {
  if (!g_active_tape) throw UsageError("backward without an active tape");
  g_active_tape->backward(loss);
}

}  // namespace ttvos
