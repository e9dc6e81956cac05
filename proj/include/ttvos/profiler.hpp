#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ttvos/flop_counter.hpp"
#include "ttvos/model.hpp"

namespace ttvos {

/// FLOPs of one convolution, bias adds included. Throws ConfigError when a
/// channel count is not divisible by `groups`.
std::uint64_t flops_conv(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t k,
                         std::uint64_t groups, std::uint64_t h_out, std::uint64_t w_out);

struct LayerFlops {
  std::string name;
  std::string stage;  // read, seg, update, decode, or "-" for layers idle at inference
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
};

/// Cost of one steady-state tracking step (frame t >= 2, templates refreshed
/// at the end). Decoding is reported apart from the three main stages.
struct FlopReport {
  std::size_t height = 0, width = 0, objects = 0;
  std::uint64_t read_flops = 0;
  std::uint64_t seg_flops = 0;
  std::uint64_t update_flops = 0;
  std::uint64_t decode_flops = 0;
  std::uint64_t params = 0;
  std::vector<LayerFlops> rows;

  std::uint64_t stage_total(const std::string& stage) const;
  std::uint64_t total() const { return read_flops + seg_flops + update_flops + decode_flops; }
  void write_csv(std::ostream& os) const;
  std::string table() const;
};

/// Static accounting from layer shapes. Height and width must be multiples of 16.
FlopReport profile_model(const TtvosModel& model, std::size_t height, std::size_t width,
                         std::size_t objects = 1);

/// Runs init then one step on a synthetic frame and returns the counter
/// filled during the step.
FlopCounter measure_step_flops(const TtvosModel& model, std::size_t height, std::size_t width,
                               std::size_t objects = 1);

}  // namespace ttvos
