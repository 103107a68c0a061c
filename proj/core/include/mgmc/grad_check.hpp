#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mgmc/matrix.hpp"
#include "mgmc/tape.hpp"

namespace mgmc::ad {

// Builds a scalar loss on `tape` from parameter variables bound in the same
// order as the checked parameter list. Must be deterministic.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct ParamGradCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;  // row-major entry index of max_rel_error
  std::size_t flagged = 0;      // entries above tolerance
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const noexcept { return max_rel_error <= tolerance; }
};

// Compares reverse-mode gradients with central differences of step h. Relative
// error per entry is |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport grad_check(const LossBuilder& loss, std::span<const Matrix> params, double h,
                           double tol, std::span<const std::string> names = {});

// Loss value at the given parameters (fresh tape, no backward).
double evaluate_loss(const LossBuilder& loss, std::span<const Matrix> params);

}  // namespace mgmc::ad
