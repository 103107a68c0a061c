#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mgmc/errors.hpp"
#include "mgmc/params.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/recurrent_branch.hpp"
#include "mgmc/tape.hpp"
#include "oracles.hpp"

using namespace mgmc;
using namespace mgmc::recurrent;

namespace {

void zero_all(ParamStore& store) {
  for (auto& v : store.values()) v = Matrix::zeros(v.rows(), v.cols());
}

Matrix small_rescaled(std::mt19937_64& rng, std::size_t n) {
  return graph::graph_from_adjacency(test::random_adjacency(rng, n, 0.4), "g").rescaled;
}

// Loss = sum of the branch output, evaluated for a given parameter vector.
double branch_loss(const Branch& branch, std::span<const Matrix> values, const Matrix& l,
                   const Matrix& z, std::size_t steps, bool autoregressive) {
  ad::Tape tape;
  const auto bound = bind(tape, values);
  const auto out = branch_forward(branch, bound, tape.constant(l), tape.constant(z),
                                  {steps, autoregressive});
  return ad::sum(ad::mul(out, out)).value()(0, 0);
}

void randomize(ParamStore& store, Rng& rng, double scale) {
  for (auto& v : store.values()) v = uniform_matrix(rng, v.rows(), v.cols(), scale);
}

}  // namespace

TEST(LstmCell, InitialisationRanges) {
  ParamStore store;
  Rng rng(1);
  const auto cell = make_lstm_cell(store, "l", 3, 4, rng);
  for (std::size_t g = 0; g < 4; ++g) {
    EXPECT_LE(store.value(cell.input_weights[g]).max_abs(), 0.5);
    EXPECT_LE(store.value(cell.hidden_weights[g]).max_abs(), 0.5);
    EXPECT_EQ(store.value(cell.biases[g]), Matrix(1, 4, g == kForget ? 1.0 : 0.0));
  }
}

TEST(LstmCell, ZeroWeightsAndStateGiveZero) {
  ParamStore store;
  Rng rng(1);
  const auto cell = make_lstm_cell(store, "l", 3, 2, rng);
  zero_all(store);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  std::mt19937_64 r(2);
  const auto next = lstm_step(cell, bound, tape.constant(test::random_matrix(r, 5, 3)),
                              zero_state(tape, 5, 2));
  EXPECT_EQ(next.c.value(), Matrix::zeros(5, 2));
  EXPECT_EQ(next.h.value(), Matrix::zeros(5, 2));
}

TEST(LstmCell, ZeroWeightsHalveTheCellState) {
  ParamStore store;
  Rng rng(1);
  const auto cell = make_lstm_cell(store, "l", 3, 2, rng);
  zero_all(store);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  const Matrix c0{{1.0, -2.0}, {0.5, 4.0}};
  const LstmState state{tape.constant(Matrix::zeros(2, 2)), tape.constant(c0)};
  const auto next = lstm_step(cell, bound, tape.constant(Matrix(2, 3, 1.0)), state);
  EXPECT_LE(max_abs_diff(next.c.value(), Matrix{{0.5, -1.0}, {0.25, 2.0}}), 1e-15);
  // h' = o * tanh(c') with o = 0.5.
  EXPECT_NEAR(next.h.value()(1, 1), 0.5 * std::tanh(2.0), 1e-15);
}

TEST(LstmCell, InputWidthMismatchIsDimensionError) {
  ParamStore store;
  Rng rng(1);
  const auto cell = make_lstm_cell(store, "l", 3, 2, rng);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  EXPECT_THROW(lstm_step(cell, bound, tape.constant(Matrix(4, 2)), zero_state(tape, 4, 2)),
               DimensionError);
}

TEST(LstmCell, GradientMatchesFiniteDifferences) {
  ParamStore store;
  Rng rng(4);
  const auto cell = make_lstm_cell(store, "l", 3, 4, rng);
  std::mt19937_64 r(6);
  const Matrix x = test::random_matrix(r, 5, 3);
  const Matrix h0 = test::random_matrix(r, 5, 4, 0.5);
  const Matrix c0 = test::random_matrix(r, 5, 4, 0.5);
  auto loss_at = [&](std::span<const Matrix> values) {
    ad::Tape tape;
    const auto bound = bind(tape, values);
    const auto next = lstm_step(cell, bound, tape.constant(x), {tape.constant(h0), tape.constant(c0)});
    return ad::sum(next.h).value()(0, 0);
  };
  ad::Tape tape;
  const auto bound = bind(tape, store);
  tape.backward(ad::sum(lstm_step(cell, bound, tape.constant(x), {tape.constant(h0), tape.constant(c0)}).h));
  const auto grads = gradients(tape, bound);
  std::vector<Matrix> values(store.values().begin(), store.values().end());
  for (std::size_t p = 0; p < values.size(); ++p) {
    const Matrix numeric = test::numeric_gradient(
        [&](const Matrix& m) {
          auto copy = values;
          copy[p] = m;
          return loss_at(copy);
        },
        values[p]);
    EXPECT_LE(test::max_rel_error(grads[p], numeric), 1e-5) << store.names()[p];
  }
}

TEST(Branch, ZeroProjectionIsIdentityForAnySteps) {
  ParamStore store;
  Rng rng(3);
  const auto branch = make_branch(store, "b", 2, 5, 6, true, rng);
  std::mt19937_64 r(7);
  const Matrix l = small_rescaled(r, 8);
  const Matrix z = test::random_matrix(r, 8, 5);
  for (const bool autoregressive : {false, true}) {
    for (const std::size_t steps : {1u, 2u, 5u, 10u}) {
      ad::Tape tape;
      const auto bound = bind(tape, store);
      const auto out = branch_forward(branch, bound, tape.constant(l), tape.constant(z),
                                      {steps, autoregressive});
      EXPECT_EQ(out.value(), z) << "steps=" << steps << " autoregressive=" << autoregressive;
    }
  }
}

TEST(Branch, ZeroStepsIsContractError) {
  ParamStore store;
  Rng rng(3);
  const auto branch = make_branch(store, "b", 1, 3, 4, true, rng);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  EXPECT_THROW(branch_forward(branch, bound, tape.constant(Matrix::identity(4)),
                              tape.constant(Matrix(4, 3)), {0, false}),
               ContractError);
}

TEST(Branch, StepsChangeOutputButNotGraphInput) {
  ParamStore store;
  Rng rng(3);
  const auto branch = make_branch(store, "b", 2, 5, 6, true, rng);
  randomize(store, rng, 0.4);
  std::mt19937_64 r(9);
  const Matrix l = small_rescaled(r, 8);
  const Matrix z = test::random_matrix(r, 8, 5);

  Matrix outputs[2];
  for (std::size_t steps = 1; steps <= 2; ++steps) {
    ad::Tape tape;
    const auto bound = bind(tape, store);
    BranchTrace trace;
    outputs[steps - 1] =
        branch_forward(branch, bound, tape.constant(l), tape.constant(z), {steps, false}, &trace)
            .value();
    ASSERT_EQ(trace.gcn_inputs.size(), steps);
    for (const auto& input : trace.gcn_inputs) EXPECT_EQ(input, z);
  }
  EXPECT_GT(max_abs_diff(outputs[0], outputs[1]), 1e-6);
}

TEST(Branch, AutoregressiveModeFeedsBackReconstruction) {
  ParamStore store;
  Rng rng(3);
  const auto branch = make_branch(store, "b", 2, 5, 6, true, rng);
  randomize(store, rng, 0.4);
  std::mt19937_64 r(9);
  const Matrix l = small_rescaled(r, 8);
  const Matrix z = test::random_matrix(r, 8, 5);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  BranchTrace trace;
  branch_forward(branch, bound, tape.constant(l), tape.constant(z), {3, true}, &trace);
  ASSERT_EQ(trace.gcn_inputs.size(), 3u);
  EXPECT_EQ(trace.gcn_inputs[0], z);
  EXPECT_FALSE(trace.gcn_inputs[1] == z);
  EXPECT_FALSE(trace.gcn_inputs[2] == trace.gcn_inputs[1]);
}

TEST(Branch, EndToEndGradientMatchesFiniteDifferences) {
  ParamStore store;
  Rng rng(12);
  const auto branch = make_branch(store, "b", 2, 5, 4, true, rng);
  randomize(store, rng, 0.5);
  std::mt19937_64 r(13);
  const Matrix l = small_rescaled(r, 8);
  const Matrix z = test::random_matrix(r, 8, 5);
  for (const bool autoregressive : {false, true}) {
    ad::Tape tape;
    const auto bound = bind(tape, store);
    const auto out = branch_forward(branch, bound, tape.constant(l), tape.constant(z), {2, autoregressive});
    tape.backward(ad::sum(ad::mul(out, out)));
    const auto grads = gradients(tape, bound);
    std::vector<Matrix> values(store.values().begin(), store.values().end());
    for (std::size_t p = 0; p < values.size(); ++p) {
      const Matrix numeric = test::numeric_gradient(
          [&](const Matrix& m) {
            auto copy = values;
            copy[p] = m;
            return branch_loss(branch, copy, l, z, 2, autoregressive);
          },
          values[p]);
      EXPECT_LE(test::max_rel_error(grads[p], numeric), 1e-4)
          << store.names()[p] << " autoregressive=" << autoregressive;
    }
  }
}
