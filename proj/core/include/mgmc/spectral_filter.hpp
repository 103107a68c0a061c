#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mgmc/matrix.hpp"
#include "mgmc/params.hpp"
#include "mgmc/tape.hpp"

namespace mgmc::spectral {

// sum_k T_k(L~) X Theta_k + bias, optionally followed by ReLU.
struct ChebLayer {
  int order = 0;  // K; the layer holds K + 1 weight matrices
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<ParamId> weights;
  std::optional<ParamId> bias;
  bool relu = true;
};

// Weights uniform(+-sqrt(6 / (in + out))), bias zero.
ChebLayer make_cheb_layer(ParamStore& store, const std::string& prefix, int order,
                          std::size_t in_dim, std::size_t out_dim, bool with_bias, Rng& rng);

// B_0 = X, B_1 = L~ X, B_k = 2 L~ B_{k-1} - B_{k-2}.
std::vector<ad::Var> cheb_basis(ad::Var rescaled, ad::Var x, int order);
std::vector<Matrix> cheb_basis(const Matrix& rescaled, const Matrix& x, int order);

ad::Var cheb_forward(const ChebLayer& layer, const BoundParams& params, ad::Var rescaled,
                     ad::Var x);
// Same sum, skipping the activation.
ad::Var cheb_preactivation(const ChebLayer& layer, const BoundParams& params, ad::Var rescaled,
                           ad::Var x);
// Continue from an already computed basis.
ad::Var cheb_combine(const ChebLayer& layer, const BoundParams& params,
                     const std::vector<ad::Var>& basis, bool activate);

}  // namespace mgmc::spectral
