#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ttvos {

// FLOP conventions shared by the runtime counter and the analytic profiler.
// A multiply-add is 2 FLOPs, bias adds are counted, and every other scalar
// arithmetic op (compare, exp, divide, ...) is 1 FLOP. Pure data movement
// (reshape, concat, transpose, pixel shuffle) is free.
namespace flops {

inline std::uint64_t conv2d(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t k,
                            std::uint64_t groups, std::uint64_t h_out, std::uint64_t w_out) {
  return 2 * k * k * (c_in / groups) * c_out * h_out * w_out + c_out * h_out * w_out;
}

inline std::uint64_t conv_transpose2d(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t k,
                                      std::uint64_t h_in, std::uint64_t w_in,
                                      std::uint64_t h_out, std::uint64_t w_out) {
  return 2 * k * k * c_in * c_out * h_in * w_in + c_out * h_out * w_out;
}

inline std::uint64_t matmul(std::uint64_t m, std::uint64_t k, std::uint64_t n) {
  return 2 * m * k * n;
}

// max, subtract, exp, accumulate, divide
inline std::uint64_t softmax(std::uint64_t n) { return 5 * n; }
inline std::uint64_t elementwise(std::uint64_t n) { return n; }
inline std::uint64_t avg_pool2d(std::uint64_t k, std::uint64_t out_elems) {
  return k * k * out_elems;
}
// 4 multiplies + 3 adds per output sample
inline std::uint64_t bilinear(std::uint64_t out_elems) { return 7 * out_elems; }

}  // namespace flops

/// Per-stage FLOP tally filled by tensor operations while installed.
class FlopCounter {
 public:
  void add(std::uint64_t n) { by_stage_[stage_] += n; }
  std::uint64_t stage_total(const std::string& stage) const;
  std::uint64_t total() const;
  const std::map<std::string, std::uint64_t>& by_stage() const { return by_stage_; }
  const std::string& stage() const { return stage_; }
  void set_stage(std::string s) { stage_ = std::move(s); }

 private:
  std::map<std::string, std::uint64_t> by_stage_;
  std::string stage_ = "untagged";
};

FlopCounter* active_flop_counter();
void count_flops(std::uint64_t n);

class FlopCounterScope {
 public:
  explicit FlopCounterScope(FlopCounter& counter);
  ~FlopCounterScope();
  FlopCounterScope(const FlopCounterScope&) = delete;
  FlopCounterScope& operator=(const FlopCounterScope&) = delete;

 private:
  FlopCounter* previous_;
};

/// Tags subsequent counted FLOPs with `stage` until destruction. A no-op
/// when no counter is installed.
class StageScope {
 public:
  explicit StageScope(const char* stage);
  ~StageScope();
  StageScope(const StageScope&) = delete;
  StageScope& operator=(const StageScope&) = delete;

 private:
  std::string previous_;
};

namespace stage {
inline constexpr const char* kRead = "read";
inline constexpr const char* kSeg = "seg";
inline constexpr const char* kUpdate = "update";
inline constexpr const char* kDecode = "decode";
}  // namespace stage

}  // namespace ttvos
