#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mgmc/matrix.hpp"
#include "mgmc/tape.hpp"

namespace mgmc {

using Rng = std::mt19937_64;

struct ParamId {
  std::size_t index = 0;
};

// Named trainable matrices. Layers hold ParamIds into a store; a forward pass
// binds the whole store onto a tape as leaves.
class ParamStore {
 public:
  ParamId add(std::string name, Matrix init);

  std::size_t size() const noexcept { return values_.size(); }
  const Matrix& value(ParamId id) const { return values_.at(id.index); }
  Matrix& value(ParamId id) { return values_.at(id.index); }
  const std::string& name(ParamId id) const { return names_.at(id.index); }

  std::span<const Matrix> values() const noexcept { return values_; }
  std::span<Matrix> values() noexcept { return values_; }
  std::span<const std::string> names() const noexcept { return names_; }
  std::size_t scalar_count() const noexcept;

  // Index of the parameter with this name; throws ContractError if absent.
  ParamId find(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

class BoundParams {
 public:
  BoundParams() = default;
  explicit BoundParams(std::vector<ad::Var> vars) : vars_(std::move(vars)) {}

  ad::Var operator[](ParamId id) const { return vars_.at(id.index); }
  std::span<const ad::Var> vars() const noexcept { return vars_; }

 private:
  std::vector<ad::Var> vars_;
};

BoundParams bind(ad::Tape& tape, const ParamStore& store);
// Same as bind, but uses caller-supplied values (for finite differences).
BoundParams bind(ad::Tape& tape, std::span<const Matrix> values);
std::vector<Matrix> gradients(const ad::Tape& tape, const BoundParams& bound);

// Entries i.i.d. uniform(-scale, scale).
Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale);

}  // namespace mgmc
