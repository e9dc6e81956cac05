#include "ttvos/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ttvos/ops.hpp"
#include "ttvos/tape.hpp"

namespace ttvos {

namespace {

struct Probe {
  std::string name;
  Tensor tensor;
  std::vector<double> analytic;
};

}  // namespace

GradCheckReport grad_check(const Block& block, std::vector<Tensor> inputs,
                           const ParameterList& params, const GradCheckOptions& opts) {
  GradCheckReport report;

  std::vector<Probe> probes;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    inputs[i] = inputs[i].detach();
    inputs[i].set_requires_grad(true);
    probes.push_back({"input" + std::to_string(i), inputs[i], {}});
  }
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.clear_grad();
    probes.push_back({p.name, t, {}});
  }

  Tensor projection;
  std::vector<bool> nominal_pattern;
  {
    Tape tape;
    TapeScope scope(tape);
    KinkRecorder kinks;
    Tensor out = block(inputs);
    nominal_pattern = kinks.pattern();
    Rng rng(opts.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> w(out.numel());
    for (double& v : w) v = dist(rng);
    projection = Tensor(out.shape(), std::move(w));
    tape.backward(sum(mul(out, projection)));
  }
  for (auto& p : probes) {
    if (p.tensor.has_grad()) {
      p.analytic.assign(p.tensor.grad().begin(), p.tensor.grad().end());
    } else {
      p.analytic.assign(p.tensor.numel(), 0.0);
    }
    p.tensor.clear_grad();
  }

  auto evaluate = [&](bool& same_pattern) {
    NoTapeScope no_tape;
    KinkRecorder kinks;
    Tensor out = block(inputs);
    same_pattern = kinks.pattern() == nominal_pattern;
    const auto y = out.data();
    const auto w = projection.data();
    // Extended accumulator: the stencil difference is tiny against |s|.
    long double s = 0.0L;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<long double>(y[i]) * w[i];
    return s;
  };

  for (auto& p : probes) {
    auto values = p.tensor.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      bool same_plus = false, same_minus = false;
      values[i] = saved + opts.step;
      const long double f_plus = evaluate(same_plus);
      values[i] = saved - opts.step;
      const long double f_minus = evaluate(same_minus);
      values[i] = saved;
      if (!same_plus || !same_minus) {
        ++report.skipped_kinks;
        continue;
      }
      const double numeric = static_cast<double>((f_plus - f_minus) / (2.0L * opts.step));
      const double analytic = p.analytic[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), opts.denominator_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  report.passed = report.checked > 0 && report.max_rel_error < opts.tolerance;
  return report;
}

}  // namespace ttvos
