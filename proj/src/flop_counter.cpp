#include "ttvos/flop_counter.hpp"

namespace ttvos {

namespace {
thread_local FlopCounter* g_counter = nullptr;
}

std::uint64_t FlopCounter::stage_total(const std::string& stage) const {
  auto it = by_stage_.find(stage);
  return it == by_stage_.end() ? 0 : it->second;
}

std::uint64_t FlopCounter::total() const {
  std::uint64_t sum = 0;
  for (const auto& [_, n] : by_stage_) sum += n;
  return sum;
}

FlopCounter* active_flop_counter() { return g_counter; }

void count_flops(std::uint64_t n) {
  if (g_counter) g_counter->add(n);
}

FlopCounterScope::FlopCounterScope(FlopCounter& counter) : previous_(g_counter) {
  g_counter = &counter;
}
FlopCounterScope::~FlopCounterScope() { g_counter = previous_; }

StageScope::StageScope(const char* stage) {
  if (g_counter) {
    previous_ = g_counter->stage();
    g_counter->set_stage(stage);
  }
}

StageScope::~StageScope() {
  if (g_counter) g_counter->set_stage(previous_);
}

}  // namespace ttvos
