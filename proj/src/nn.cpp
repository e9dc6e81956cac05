#include "ttvos/nn.hpp"

#include <cmath>
#include <set>

#include "ttvos/errors.hpp"
#include "ttvos/ops.hpp"

namespace ttvos {

void check_unique_names(const ParameterList& params) {
  std::set<std::string> seen;
  for (const auto& p : params) {
    if (!seen.insert(p.name).second) throw ConfigError("duplicate parameter name " + p.name);
  }
}

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

namespace {
void fill_uniform(Tensor& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.mutable_data()) v = dist(rng);
}
}  // namespace

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
               std::size_t kernel, std::size_t stride, std::size_t padding, std::size_t groups)
    : name_(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      groups_(groups) {
  if (groups == 0 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ConfigError(name_ + ": channels " + std::to_string(in_channels) + "->" +
                      std::to_string(out_channels) + " not divisible by groups " +
                      std::to_string(groups));
  }
  weight = Tensor(Shape{out_channels, in_channels / groups, kernel, kernel});
  bias = Tensor(Shape{out_channels});
  weight.set_requires_grad(true);
  bias.set_requires_grad(true);
}

void Conv2d::init(Rng& rng) {
  const double fan_in = static_cast<double>(in_ / groups_ * k_ * k_);
  fill_uniform(weight, std::sqrt(6.0 / fan_in), rng);
  for (double& v : bias.mutable_data()) v = 0.0;
}

Tensor Conv2d::forward(const Tensor& x) const {
  return conv2d(x, weight, bias, stride_, pad_, groups_);
}

void Conv2d::collect(ParameterList& out) const {
  out.push_back({name_ + ".weight", weight});
  out.push_back({name_ + ".bias", bias});
}

ConvTranspose2d::ConvTranspose2d(std::string name, std::size_t in_channels,
                                 std::size_t out_channels, std::size_t kernel, std::size_t stride,
                                 std::size_t padding)
    : name_(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding) {
  weight = Tensor(Shape{in_channels, out_channels, kernel, kernel});
  bias = Tensor(Shape{out_channels});
  weight.set_requires_grad(true);
  bias.set_requires_grad(true);
}

void ConvTranspose2d::init(Rng& rng) {
  // Each output sample receives in * (k/stride)^2 contributions.
  const double taps = static_cast<double>(k_ * k_) / static_cast<double>(stride_ * stride_);
  const double fan_in = static_cast<double>(in_) * std::max(1.0, taps);
  fill_uniform(weight, std::sqrt(6.0 / fan_in), rng);
  for (double& v : bias.mutable_data()) v = 0.0;
}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  return conv_transpose2d(x, weight, bias, stride_, pad_);
}

void ConvTranspose2d::collect(ParameterList& out) const {
  out.push_back({name_ + ".weight", weight});
  out.push_back({name_ + ".bias", bias});
}

}  // namespace ttvos
