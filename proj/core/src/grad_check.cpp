#include "mgmc/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mgmc/errors.hpp"

namespace mgmc::ad {

namespace {

std::vector<Var> bind(Tape& tape, std::span<const Matrix> params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.parameter(p));
  return vars;
}

double scalar_value(Var loss) {
  const Matrix& v = loss.value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("grad_check: loss must be 1x1, got " + v.shape_string());
  }
  return v(0, 0);
}

}  // namespace

double evaluate_loss(const LossBuilder& loss, std::span<const Matrix> params) {
  Tape tape;
  const auto vars = bind(tape, params);
  return scalar_value(loss(tape, vars));
}

GradCheckReport grad_check(const LossBuilder& loss, std::span<const Matrix> params, double h,
                           double tol, std::span<const std::string> names) {
  if (!(h > 0.0)) throw ContractError("grad_check: step h must be positive");
  if (!names.empty() && names.size() != params.size()) {
    throw ContractError("grad_check: names and params differ in length");
  }

  std::vector<Matrix> analytic;
  double base = 0.0;
  {
    Tape tape;
    const auto vars = bind(tape, params);
    Var l = loss(tape, vars);
    base = scalar_value(l);
    tape.backward(l);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }
  const double again = evaluate_loss(loss, params);
  if (std::memcmp(&base, &again, sizeof(double)) != 0) {
    throw DeterminismError("grad_check: loss closure is not deterministic (" +
                           std::to_string(base) + " vs " + std::to_string(again) + ")");
  }

  GradCheckReport report;
  report.tolerance = tol;
  std::vector<Matrix> work(params.begin(), params.end());
  for (std::size_t p = 0; p < work.size(); ++p) {
    ParamGradCheck check;
    check.name = names.empty() ? "param" + std::to_string(p) : names[p];
    auto entries = work[p].data();
    const auto grads = analytic[p].data();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double orig = entries[i];
      entries[i] = orig + h;
      const double up = evaluate_loss(loss, work);
      entries[i] = orig - h;
      const double down = evaluate_loss(loss, work);
      entries[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > check.max_rel_error) {
        check.max_rel_error = rel;
        check.worst_index = i;
      }
      if (rel > tol) ++check.flagged;
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.params.push_back(std::move(check));
  }
  return report;
}

}  // namespace mgmc::ad
