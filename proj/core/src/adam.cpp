#include "mgmc/adam.hpp"

#include <cmath>
#include <string>

#include "mgmc/errors.hpp"

namespace mgmc::training {

void Adam::step(std::span<Matrix> params, std::span<const Matrix> grads, double learning_rate,
                std::size_t epoch) {
  if (params.size() != grads.size()) {
    throw ContractError("adam: " + std::to_string(params.size()) + " params but " +
                        std::to_string(grads.size()) + " gradients");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("adam: learning rate must be positive");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::zeros(p.rows(), p.cols()));
      v_.push_back(Matrix::zeros(p.rows(), p.cols()));
    }
  }
  if (m_.size() != params.size()) throw ContractError("adam: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!grads[i].same_shape(params[i]) || !m_[i].same_shape(params[i])) {
      throw DimensionError("adam: shape mismatch for parameter " + std::to_string(i));
    }
    if (!grads[i].all_finite()) {
      throw NumericError("non-finite gradient for parameter " + std::to_string(i) + " at epoch " +
                         std::to_string(epoch));
    }
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = m_[i].dense();
    auto& v = v_[i].dense();
    const auto& g = grads[i].dense();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    params[i].dense().array() -=
        learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + options_.epsilon);
  }
}

}  // namespace mgmc::training
