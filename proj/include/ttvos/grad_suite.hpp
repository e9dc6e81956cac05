#pragma once

#include <string>
#include <vector>

#include "ttvos/grad_check.hpp"

namespace ttvos {

struct GradSuiteRow {
  std::string block;
  GradCheckReport report;
};

/// Finite-difference checks of every differentiable block of the tiny
/// model, inputs and parameters alike, plus one full training step.
std::vector<GradSuiteRow> run_grad_suite(const GradCheckOptions& opts = {});

}  // namespace ttvos
