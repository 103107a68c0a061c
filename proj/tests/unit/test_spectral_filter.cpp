#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mgmc/errors.hpp"
#include "mgmc/params.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/spectral_filter.hpp"
#include "mgmc/tape.hpp"
#include "oracles.hpp"

using namespace mgmc;
using namespace mgmc::spectral;

namespace {

// T_k(L~) X through the eigendecomposition of L~, with T_k(l) = cos(k acos l).
Matrix spectral_oracle(const Matrix& rescaled, const Matrix& x, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(rescaled.dense()));
  Eigen::VectorXd lam = solver.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double l = std::clamp(lam(i), -1.0, 1.0);
    lam(i) = std::cos(static_cast<double>(k) * std::acos(l));
  }
  const Eigen::MatrixXd& u = solver.eigenvectors();
  const Eigen::MatrixXd poly = u * lam.asDiagonal() * u.transpose();
  return Matrix(DenseRowMajor(poly * Eigen::MatrixXd(x.dense())));
}

Matrix random_rescaled(std::mt19937_64& rng, std::size_t n) {
  const auto g = graph::graph_from_adjacency(test::random_adjacency(rng, n, 0.3), "r");
  return g.rescaled;
}

}  // namespace

TEST(ChebBasis, OrderZeroIsInputOnly) {
  const Matrix l{{0, -1}, {-1, 0}};
  const Matrix x{{1}, {2}};
  const auto basis = cheb_basis(l, x, 0);
  ASSERT_EQ(basis.size(), 1u);
  EXPECT_EQ(basis[0], x);
}

TEST(ChebBasis, TwoNodeHandExample) {
  const Matrix l{{0, -1}, {-1, 0}};
  const Matrix x{{1}, {0}};
  const auto basis = cheb_basis(l, x, 2);
  ASSERT_EQ(basis.size(), 3u);
  // Compared by value: the recurrence may legitimately produce -0.0.
  EXPECT_EQ(max_abs_diff(basis[1], Matrix{{0}, {-1}}), 0.0);
  EXPECT_EQ(max_abs_diff(basis[2], Matrix{{1}, {0}}), 0.0);
}

TEST(ChebBasis, NegativeOrderIsContractError) {
  const Matrix l{{0, -1}, {-1, 0}};
  EXPECT_THROW(cheb_basis(l, Matrix{{1}, {0}}, -1), ContractError);
  ad::Tape tape;
  EXPECT_THROW(cheb_basis(tape.constant(l), tape.constant(Matrix{{1}, {0}}), -1), ContractError);
}

TEST(ChebBasis, ShapeMismatchIsDimensionError) {
  const Matrix l{{0, -1}, {-1, 0}};
  EXPECT_THROW(cheb_basis(l, Matrix(3, 1), 2), DimensionError);
}

TEST(ChebBasis, MatchesSpectralOracleOnRandomGraphs) {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial);
    const Matrix l = random_rescaled(rng, n);
    const Matrix x = test::random_matrix(rng, n, 3);
    const auto basis = cheb_basis(l, x, 5);
    for (int k = 0; k <= 5; ++k) worst = std::max(worst, max_abs_diff(basis[k], spectral_oracle(l, x, k)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(ChebBasis, TapeAndPlainVersionsAgree) {
  std::mt19937_64 rng(3);
  const Matrix l = random_rescaled(rng, 12);
  const Matrix x = test::random_matrix(rng, 12, 2);
  ad::Tape tape;
  const auto vars = cheb_basis(tape.constant(l), tape.constant(x), 4);
  const auto plain = cheb_basis(l, x, 4);
  for (int k = 0; k <= 4; ++k) EXPECT_LE(max_abs_diff(vars[k].value(), plain[k]), 1e-12);
}

TEST(ChebBasis, EdgelessGraphAlternatesSign) {
  const Matrix l = graph::graph_from_adjacency(Matrix(4, 4), "empty").rescaled;
  std::mt19937_64 rng(5);
  const Matrix x = test::random_matrix(rng, 4, 2);
  const auto basis = cheb_basis(l, x, 5);
  for (int k = 0; k <= 5; ++k) {
    Matrix expected = x;
    if (k % 2 == 1) for (auto& v : expected.data()) v = -v;
    EXPECT_LE(max_abs_diff(basis[k], expected), 1e-12) << "k=" << k;
  }
}

TEST(ChebLayer, HoldsOrderPlusOneWeights) {
  ParamStore store;
  Rng rng(1);
  const auto layer = make_cheb_layer(store, "g", 3, 4, 6, true, rng);
  ASSERT_EQ(layer.weights.size(), 4u);
  for (const auto id : layer.weights) {
    EXPECT_EQ(store.value(id).rows(), 4u);
    EXPECT_EQ(store.value(id).cols(), 6u);
    EXPECT_LE(store.value(id).max_abs(), std::sqrt(6.0 / 10.0));
  }
  ASSERT_TRUE(layer.bias.has_value());
  EXPECT_EQ(store.value(*layer.bias), Matrix::zeros(1, 6));
}

TEST(ChebLayer, IdentityFilterReturnsInput) {
  ParamStore store;
  Rng rng(1);
  auto layer = make_cheb_layer(store, "g", 0, 3, 3, true, rng);
  store.value(layer.weights[0]) = Matrix::identity(3);
  std::mt19937_64 r(2);
  const Matrix x = test::random_matrix(r, 5, 3);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  const auto out = cheb_preactivation(layer, bound, tape.constant(random_rescaled(r, 5)), tape.constant(x));
  EXPECT_EQ(out.value(), x);
}

TEST(ChebLayer, ZeroWeightsGiveZero) {
  ParamStore store;
  Rng rng(1);
  auto layer = make_cheb_layer(store, "g", 2, 3, 4, true, rng);
  for (const auto id : layer.weights) store.value(id) = Matrix::zeros(3, 4);
  std::mt19937_64 r(2);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  const auto out = cheb_forward(layer, bound, tape.constant(random_rescaled(r, 6)),
                                tape.constant(test::random_matrix(r, 6, 3)));
  EXPECT_EQ(out.value(), Matrix::zeros(6, 4));
}

TEST(ChebLayer, ForwardAppliesRelu) {
  ParamStore store;
  Rng rng(4);
  auto layer = make_cheb_layer(store, "g", 2, 3, 4, true, rng);
  std::mt19937_64 r(9);
  const Matrix l = random_rescaled(r, 7);
  const Matrix x = test::random_matrix(r, 7, 3);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  const auto pre = cheb_preactivation(layer, bound, tape.constant(l), tape.constant(x));
  const auto out = cheb_forward(layer, bound, tape.constant(l), tape.constant(x));
  for (std::size_t i = 0; i < pre.value().size(); ++i) {
    EXPECT_EQ(out.value().data()[i], std::max(0.0, pre.value().data()[i]));
  }
}

TEST(ChebLayer, InputWidthMismatchIsDimensionError) {
  ParamStore store;
  Rng rng(1);
  auto layer = make_cheb_layer(store, "g", 1, 3, 2, true, rng);
  ad::Tape tape;
  const auto bound = bind(tape, store);
  EXPECT_THROW(cheb_forward(layer, bound, tape.constant(Matrix::identity(4)), tape.constant(Matrix(4, 2))),
               DimensionError);
}

TEST(ChebLayer, GradientMatchesFiniteDifferences) {
  ParamStore store;
  Rng rng(8);
  auto layer = make_cheb_layer(store, "g", 3, 3, 4, true, rng);
  // Nonzero bias so every parameter has a non-trivial gradient.
  store.value(*layer.bias) = uniform_matrix(rng, 1, 4, 0.5);
  std::mt19937_64 r(10);
  const Matrix l = random_rescaled(r, 8);
  const Matrix x = test::random_matrix(r, 8, 3);

  auto loss_at = [&](std::span<const Matrix> values) {
    ad::Tape tape;
    const auto bound = bind(tape, values);
    return ad::sum(cheb_preactivation(layer, bound, tape.constant(l), tape.constant(x))).value()(0, 0);
  };
  ad::Tape tape;
  const auto bound = bind(tape, store);
  tape.backward(ad::sum(cheb_preactivation(layer, bound, tape.constant(l), tape.constant(x))));
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
    EXPECT_LE(test::max_rel_error(grads[p], numeric), 1e-6) << store.names()[p];
  }
}

TEST(ChebLayer, PermutationEquivariance) {
  ParamStore store;
  Rng rng(2);
  auto layer = make_cheb_layer(store, "g", 3, 2, 3, true, rng);
  std::mt19937_64 r(21);
  const std::size_t n = 9;
  const Matrix l = random_rescaled(r, n);
  const Matrix x = test::random_matrix(r, n, 2);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), r);
  Eigen::PermutationMatrix<Eigen::Dynamic> p(Eigen::Map<Eigen::VectorXi>(perm.data(), n));
  const Matrix pl(DenseRowMajor(p * l.dense() * p.transpose()));
  const Matrix px(DenseRowMajor(p * x.dense()));

  ad::Tape tape;
  const auto bound = bind(tape, store);
  const Matrix out = cheb_forward(layer, bound, tape.constant(l), tape.constant(x)).value();
  const Matrix pout = cheb_forward(layer, bound, tape.constant(pl), tape.constant(px)).value();
  EXPECT_LE(max_abs_diff(pout, Matrix(DenseRowMajor(p * out.dense()))), 1e-10);
}
