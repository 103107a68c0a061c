#include <atomic>
#include <random>

#include <gtest/gtest.h>

#include "mgmc/errors.hpp"
#include "mgmc/grad_check.hpp"
#include "mgmc/tape.hpp"
#include "oracles.hpp"

using namespace mgmc;
using namespace mgmc::ad;

TEST(GradCheck, QuadraticIsExact) {
  const std::vector<Matrix> params{Matrix{{1.0}, {2.0}}};
  LossBuilder loss = [](Tape&, std::span<const Var> p) { return frobenius_sq(p[0]); };
  const auto report = grad_check(loss, params, 1e-5, 1e-9);
  EXPECT_TRUE(report.passed());
  EXPECT_LE(report.max_rel_error, 1e-9);
  // analytic gradient 2w = [2, 4]
  Tape t;
  const Var w = t.parameter(params[0]);
  t.backward(frobenius_sq(w));
  EXPECT_EQ(t.grad(w), (Matrix{{2.0}, {4.0}}));
}

TEST(GradCheck, SigmoidChain) {
  std::mt19937_64 rng(7);
  const std::vector<Matrix> params{test::random_matrix(rng, 3, 4), test::random_matrix(rng, 4, 2)};
  const Matrix x = test::random_matrix(rng, 5, 3);
  LossBuilder loss = [&](Tape& t, std::span<const Var> p) {
    return sum(sigmoid(matmul(sigmoid(matmul(t.constant(x), p[0])), p[1])));
  };
  const std::vector<std::string> names{"W1", "W2"};
  const auto report = grad_check(loss, params, 1e-5, 1e-6, names);
  EXPECT_TRUE(report.passed()) << report.max_rel_error;
  ASSERT_EQ(report.params.size(), 2u);
  EXPECT_EQ(report.params[0].name, "W1");
}

TEST(GradCheck, CorruptedBackwardIsFlagged) {
  const std::vector<Matrix> params{Matrix{{0.3, -1.2, 2.0}}};
  LossBuilder loss = [](Tape&, std::span<const Var> p) {
    // value x^2, but claims gradient 3x instead of 2x
    Matrix value(p[0].rows(), p[0].cols());
    for (std::size_t i = 0; i < value.size(); ++i) value.data()[i] = p[0].value().data()[i] * p[0].value().data()[i];
    const Var sq = custom_unary(p[0], value, [](const Matrix& g, const Matrix& in, const Matrix&) {
      Matrix out(in.rows(), in.cols());
      for (std::size_t i = 0; i < in.size(); ++i) out.data()[i] = 3.0 * in.data()[i] * g.data()[i];
      return out;
    });
    return sum(sq);
  };
  const auto report = grad_check(loss, params, 1e-5, 1e-4);
  EXPECT_FALSE(report.passed());
  EXPECT_EQ(report.params[0].flagged, 3u);
  EXPECT_EQ(report.params[0].worst_index, 2u);
}

TEST(GradCheck, NonDeterministicClosureIsRejected) {
  std::atomic<int> calls{0};
  const std::vector<Matrix> params{Matrix{{1.0}}};
  LossBuilder loss = [&](Tape&, std::span<const Var> p) {
    return scale(sum(p[0]), 1.0 + 1e-3 * calls++);
  };
  EXPECT_THROW(grad_check(loss, params, 1e-5, 1e-6), DeterminismError);
}

TEST(GradCheck, EvaluateLossMatchesDirectComputation) {
  const std::vector<Matrix> params{Matrix{{3.0, 4.0}}};
  LossBuilder loss = [](Tape&, std::span<const Var> p) { return frobenius_sq(p[0]); };
  EXPECT_EQ(evaluate_loss(loss, params), 25.0);
}
