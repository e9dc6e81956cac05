#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ttvos/tensor.hpp"

namespace ttvos {

using Rng = std::mt19937_64;

/// A trainable tensor addressed by a dotted path, e.g. "decoder.up1.weight".
/// Names are unique within a model and key the tensor in checkpoints.
struct Parameter {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<Parameter>;

/// Throws ConfigError if two parameters share a name.
void check_unique_names(const ParameterList& params);
std::size_t parameter_count(const ParameterList& params);

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, std::size_t stride = 1, std::size_t padding = 0,
         std::size_t groups = 1);

  /// He-style uniform init scaled by fan-in; zero bias.
  void init(Rng& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParameterList& out) const;

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return k_; }
  std::size_t stride() const { return stride_; }
  std::size_t padding() const { return pad_; }
  std::size_t groups() const { return groups_; }
  const std::string& name() const { return name_; }
  std::size_t out_extent(std::size_t in_extent) const {
    return (in_extent + 2 * pad_ - k_) / stride_ + 1;
  }

  Tensor weight;
  Tensor bias;

 private:
  std::string name_;
  std::size_t in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0, groups_ = 1;
};

class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, std::size_t in_channels, std::size_t out_channels,
                  std::size_t kernel, std::size_t stride = 1, std::size_t padding = 0);

  void init(Rng& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParameterList& out) const;

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return k_; }
  std::size_t stride() const { return stride_; }
  const std::string& name() const { return name_; }
  std::size_t out_extent(std::size_t in_extent) const {
    return (in_extent - 1) * stride_ + k_ - 2 * pad_;
  }

  Tensor weight;  // [in, out, k, k]
  Tensor bias;

 private:
  std::string name_;
  std::size_t in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
};

}  // namespace ttvos
