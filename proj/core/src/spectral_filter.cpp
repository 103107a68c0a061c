#include "mgmc/spectral_filter.hpp"

#include <cmath>

#include "mgmc/errors.hpp"

namespace mgmc::spectral {

ChebLayer make_cheb_layer(ParamStore& store, const std::string& prefix, int order,
                          std::size_t in_dim, std::size_t out_dim, bool with_bias, Rng& rng) {
  if (order < 0) throw ContractError("Chebyshev order must be >= 0, got " + std::to_string(order));
  if (in_dim == 0 || out_dim == 0) throw ContractError("Chebyshev layer dims must be positive");
  ChebLayer layer;
  layer.order = order;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  const double s = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (int k = 0; k <= order; ++k) {
    layer.weights.push_back(store.add(prefix + ".theta" + std::to_string(k),
                                      uniform_matrix(rng, in_dim, out_dim, s)));
  }
  if (with_bias) layer.bias = store.add(prefix + ".bias", Matrix::zeros(1, out_dim));
  return layer;
}

std::vector<ad::Var> cheb_basis(ad::Var rescaled, ad::Var x, int order) {
  if (order < 0) throw ContractError("cheb_basis: order must be >= 0, got " + std::to_string(order));
  if (rescaled.rows() != rescaled.cols() || rescaled.cols() != x.rows()) {
    throw DimensionError("cheb_basis: Laplacian " + rescaled.value().shape_string() +
                         " incompatible with signal " + x.value().shape_string());
  }
  std::vector<ad::Var> basis{x};
  if (order >= 1) basis.push_back(ad::matmul(rescaled, x));
  for (int k = 2; k <= order; ++k) {
    basis.push_back(ad::sub(ad::scale(ad::matmul(rescaled, basis[k - 1]), 2.0), basis[k - 2]));
  }
  return basis;
}

std::vector<Matrix> cheb_basis(const Matrix& rescaled, const Matrix& x, int order) {
  ad::Tape tape;
  const auto vars = cheb_basis(tape.constant(rescaled), tape.constant(x), order);
  std::vector<Matrix> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.value());
  return out;
}

ad::Var cheb_combine(const ChebLayer& layer, const BoundParams& params,
                     const std::vector<ad::Var>& basis, bool activate) {
  if (basis.size() != layer.weights.size()) {
    throw ContractError("cheb_combine: basis has " + std::to_string(basis.size()) +
                        " terms, layer expects " + std::to_string(layer.weights.size()));
  }
  if (basis.front().cols() != layer.in_dim) {
    throw DimensionError("cheb_forward: input has " + std::to_string(basis.front().cols()) +
                         " columns, layer expects " + std::to_string(layer.in_dim));
  }
  ad::Var out = ad::matmul(basis[0], params[layer.weights[0]]);
  for (std::size_t k = 1; k < basis.size(); ++k) {
    out = ad::add(out, ad::matmul(basis[k], params[layer.weights[k]]));
  }
  if (layer.bias) out = ad::add_row_broadcast(out, params[*layer.bias]);
  return activate ? ad::relu(out) : out;
}

ad::Var cheb_preactivation(const ChebLayer& layer, const BoundParams& params, ad::Var rescaled,
                           ad::Var x) {
  return cheb_combine(layer, params, cheb_basis(rescaled, x, layer.order), false);
}

ad::Var cheb_forward(const ChebLayer& layer, const BoundParams& params, ad::Var rescaled,
                     ad::Var x) {
  return cheb_combine(layer, params, cheb_basis(rescaled, x, layer.order), layer.relu);
}

}  // namespace mgmc::spectral
