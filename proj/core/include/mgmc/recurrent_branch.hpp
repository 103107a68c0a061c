#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "mgmc/params.hpp"
#include "mgmc/spectral_filter.hpp"
#include "mgmc/tape.hpp"

namespace mgmc::recurrent {

// Gate order in the arrays below: forget, input, output, candidate.
enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };

struct LstmCell {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<ParamId, 4> input_weights{};   // input_dim x hidden_dim
  std::array<ParamId, 4> hidden_weights{};  // hidden_dim x hidden_dim
  std::array<ParamId, 4> biases{};          // 1 x hidden_dim
};

// Weights uniform(+-1/sqrt(hidden)); forget bias 1, other biases 0.
LstmCell make_lstm_cell(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                        std::size_t hidden_dim, Rng& rng);

struct LstmState {
  ad::Var h;
  ad::Var c;
};

LstmState zero_state(ad::Tape& tape, std::size_t rows, std::size_t hidden_dim);

// f = s(xWf + hUf + bf), i = s(...), o = s(...), g = tanh(...),
// c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_step(const LstmCell& cell, const BoundParams& params, ad::Var input,
                    const LstmState& state);

// One graph branch: Chebyshev layer -> LSTM unrolled `steps` times -> linear
// projection whose output is added to the running reconstruction.
struct Branch {
  spectral::ChebLayer gcn;
  LstmCell lstm;
  ParamId out_weight;  // hidden x (m + c), zero at init
  ParamId out_bias;    // 1 x (m + c), zero at init
};

Branch make_branch(ParamStore& store, const std::string& prefix, int cheb_order,
                   std::size_t signal_dim, std::size_t hidden_dim, bool cheb_bias, Rng& rng);

struct BranchOptions {
  std::size_t steps = 10;
  // Feed the evolving reconstruction back into the graph convolution at every
  // step instead of pinning it to the original input.
  bool autoregressive = false;
};

// Records the matrix fed to the graph convolution at each unroll step.
struct BranchTrace {
  std::vector<Matrix> gcn_inputs;
};

ad::Var branch_forward(const Branch& branch, const BoundParams& params, ad::Var rescaled, ad::Var z,
                       const BranchOptions& options, BranchTrace* trace = nullptr);

}  // namespace mgmc::recurrent
