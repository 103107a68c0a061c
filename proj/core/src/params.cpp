#include "mgmc/params.hpp"

#include "mgmc/errors.hpp"

namespace mgmc {

ParamId ParamStore::add(std::string name, Matrix init) {
  for (const auto& n : names_) {
    if (n == name) throw ContractError("ParamStore: duplicate parameter name '" + name + "'");
  }
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return ParamId{values_.size() - 1};
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t total = 0;
  for (const auto& v : values_) total += v.size();
  return total;
}

ParamId ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return ParamId{i};
  }
  throw ContractError("ParamStore: no parameter named '" + name + "'");
}

BoundParams bind(ad::Tape& tape, const ParamStore& store) { return bind(tape, store.values()); }

BoundParams bind(ad::Tape& tape, std::span<const Matrix> values) {
  std::vector<ad::Var> vars;
  vars.reserve(values.size());
  for (const auto& v : values) vars.push_back(tape.parameter(v));
  return BoundParams(std::move(vars));
}

std::vector<Matrix> gradients(const ad::Tape& tape, const BoundParams& bound) {
  std::vector<Matrix> out;
  out.reserve(bound.vars().size());
  for (const auto& v : bound.vars()) out.push_back(tape.grad(v));
  return out;
}

Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = dist(rng);
  return m;
}

}  // namespace mgmc
