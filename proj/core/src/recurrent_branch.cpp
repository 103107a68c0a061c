#include "mgmc/recurrent_branch.hpp"

#include <cmath>

#include "mgmc/errors.hpp"

namespace mgmc::recurrent {

namespace {
constexpr std::array<const char*, 4> kGateNames{"f", "i", "o", "g"};
}

LstmCell make_lstm_cell(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                        std::size_t hidden_dim, Rng& rng) {
  if (input_dim == 0 || hidden_dim == 0) throw ContractError("LSTM dims must be positive");
  LstmCell cell;
  cell.input_dim = input_dim;
  cell.hidden_dim = hidden_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (std::size_t g = 0; g < 4; ++g) {
    const std::string gate = kGateNames[g];
    cell.input_weights[g] =
        store.add(prefix + ".W" + gate, uniform_matrix(rng, input_dim, hidden_dim, s));
    cell.hidden_weights[g] =
        store.add(prefix + ".U" + gate, uniform_matrix(rng, hidden_dim, hidden_dim, s));
    cell.biases[g] =
        store.add(prefix + ".b" + gate, Matrix(1, hidden_dim, g == kForget ? 1.0 : 0.0));
  }
  return cell;
}

LstmState zero_state(ad::Tape& tape, std::size_t rows, std::size_t hidden_dim) {
  return {tape.constant(Matrix::zeros(rows, hidden_dim)),
          tape.constant(Matrix::zeros(rows, hidden_dim))};
}

LstmState lstm_step(const LstmCell& cell, const BoundParams& params, ad::Var input,
                    const LstmState& state) {
  if (input.cols() != cell.input_dim) {
    throw DimensionError("lstm_step: input has " + std::to_string(input.cols()) +
                         " columns, cell expects " + std::to_string(cell.input_dim));
  }
  if (state.h.cols() != cell.hidden_dim || state.h.rows() != input.rows() ||
      !state.h.value().same_shape(state.c.value())) {
    throw DimensionError("lstm_step: state " + state.h.value().shape_string() +
                         " does not match input rows / hidden width");
  }
  auto pre = [&](std::size_t g) {
    ad::Var a = ad::add(ad::matmul(input, params[cell.input_weights[g]]),
                        ad::matmul(state.h, params[cell.hidden_weights[g]]));
    return ad::add_row_broadcast(a, params[cell.biases[g]]);
  };
  ad::Var f = ad::sigmoid(pre(kForget));
  ad::Var i = ad::sigmoid(pre(kInput));
  ad::Var o = ad::sigmoid(pre(kOutput));
  ad::Var g = ad::tanh(pre(kCandidate));
  ad::Var c = ad::add(ad::mul(f, state.c), ad::mul(i, g));
  ad::Var h = ad::mul(o, ad::tanh(c));
  return {h, c};
}

Branch make_branch(ParamStore& store, const std::string& prefix, int cheb_order,
                   std::size_t signal_dim, std::size_t hidden_dim, bool cheb_bias, Rng& rng) {
  Branch b;
  b.gcn = spectral::make_cheb_layer(store, prefix + ".gcn", cheb_order, signal_dim, hidden_dim,
                                    cheb_bias, rng);
  b.lstm = make_lstm_cell(store, prefix + ".lstm", hidden_dim, hidden_dim, rng);
  b.out_weight = store.add(prefix + ".out.W", Matrix::zeros(hidden_dim, signal_dim));
  b.out_bias = store.add(prefix + ".out.b", Matrix::zeros(1, signal_dim));
  return b;
}

ad::Var branch_forward(const Branch& branch, const BoundParams& params, ad::Var rescaled, ad::Var z,
                       const BranchOptions& options, BranchTrace* trace) {
  if (options.steps == 0) throw ContractError("branch_forward: unroll steps must be >= 1");
  if (z.cols() != branch.gcn.in_dim) {
    throw DimensionError("branch_forward: Z has " + std::to_string(z.cols()) +
                         " columns, branch expects " + std::to_string(branch.gcn.in_dim));
  }
  ad::Tape& tape = *z.tape();
  LstmState state = zero_state(tape, z.rows(), branch.lstm.hidden_dim);
  ad::Var acc = z;
  ad::Var q;
  if (!options.autoregressive) q = spectral::cheb_forward(branch.gcn, params, rescaled, z);
  for (std::size_t t = 0; t < options.steps; ++t) {
    const ad::Var gcn_input = options.autoregressive ? acc : z;
    if (trace) trace->gcn_inputs.push_back(gcn_input.value());
    if (options.autoregressive) q = spectral::cheb_forward(branch.gcn, params, rescaled, gcn_input);
    state = lstm_step(branch.lstm, params, q, state);
    ad::Var delta = ad::add_row_broadcast(ad::matmul(state.h, params[branch.out_weight]),
                                          params[branch.out_bias]);
    acc = ad::add(acc, delta);
  }
  return acc;
}

}  // namespace mgmc::recurrent
