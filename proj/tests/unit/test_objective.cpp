#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mgmc/errors.hpp"
#include "mgmc/objective.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/tape.hpp"
#include "oracles.hpp"

using namespace mgmc;
using namespace mgmc::objective;

namespace {

const Matrix kEdgeLaplacian{{1, -1}, {-1, 1}};

double scalar(ad::Var v) { return v.value()(0, 0); }

// 8 x 5 toy problem: 3 feature columns, 2 label columns, rows 0..4 labeled.
struct Toy {
  Matrix z;
  MaskPair masks;
  std::vector<Matrix> laplacians;
  std::vector<Matrix> branches;
  Matrix fused;
};

Toy make_toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Toy t;
  const std::size_t n = 8, m = 3, c = 2;
  t.z = test::random_matrix(rng, n, m + c);
  t.masks.features = Matrix(n, m + c);
  t.masks.labels = Matrix(n, m + c);
  std::bernoulli_distribution seen(0.6);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      t.masks.features(r, j) = seen(rng) ? 1.0 : 0.0;
      if (t.masks.features(r, j) == 0.0) t.z(r, j) = 0.0;
    }
    const bool labeled = r < 5;
    t.z(r, m) = labeled && r % 2 == 0 ? 1.0 : 0.0;
    t.z(r, m + 1) = labeled && r % 2 == 1 ? 1.0 : 0.0;
    if (labeled) t.masks.labels(r, m) = t.masks.labels(r, m + 1) = 1.0;
  }
  for (int i = 0; i < 2; ++i) {
    t.laplacians.push_back(graph::normalized_laplacian(test::random_adjacency(rng, n, 0.5)));
    t.branches.push_back(test::random_matrix(rng, n, m + c));
  }
  t.fused = test::random_matrix(rng, n, m + c);
  return t;
}

// Direct per-term evaluation with Eigen, independent of the tape.
double toy_oracle(const Toy& t, const LossWeights& w) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.branches.size(); ++i) {
    const auto& zb = t.branches[i].dense();
    total += w.dirichlet / 2.0 * (zb.transpose() * t.laplacians[i].dense() * zb).trace();
    const DenseRowMajor diff = (zb - t.z.dense()).cwiseProduct(t.masks.features.dense());
    total += w.reconstruction / 2.0 * diff.squaredNorm();
  }
  double ce = 0.0;
  std::size_t rows = 0;
  for (std::size_t r = 0; r < t.z.rows(); ++r) {
    if (t.masks.labels(r, 3) == 0.0) continue;
    const double a = t.fused(r, 3), b = t.fused(r, 4);
    const double lse = std::log(std::exp(a) + std::exp(b));
    ce += t.z(r, 3) * (lse - a) + t.z(r, 4) * (lse - b);
    ++rows;
  }
  return total + w.classification * ce / static_cast<double>(rows);
}

struct ToyGradients {
  std::vector<Matrix> branches;
  Matrix fused;
};

ToyGradients toy_gradients(const Toy& t, const LossWeights& w) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& b : t.branches) vars.push_back(tape.parameter(b));
  ad::Var fused = tape.parameter(t.fused);
  std::vector<const Matrix*> laps;
  for (const auto& l : t.laplacians) laps.push_back(&l);
  tape.backward(mgmc_loss(vars, fused, t.z, t.masks, laps, w).total);
  ToyGradients g;
  for (const auto& v : vars) g.branches.push_back(tape.grad(v));
  g.fused = tape.grad(fused);
  return g;
}

}  // namespace

TEST(Dirichlet, ConstantColumnOnEdgeIsZero) {
  ad::Tape tape;
  EXPECT_EQ(scalar(dirichlet(tape.constant(Matrix{{1}, {1}}), kEdgeLaplacian)), 0.0);
}

TEST(Dirichlet, AlternatingColumnOnEdge) {
  ad::Tape tape;
  EXPECT_DOUBLE_EQ(scalar(dirichlet(tape.constant(Matrix{{1}, {-1}}), kEdgeLaplacian)), 4.0);
}

TEST(Dirichlet, EdgelessGraphIsZero) {
  std::mt19937_64 rng(1);
  ad::Tape tape;
  const Matrix l = graph::normalized_laplacian(Matrix(5, 5));
  EXPECT_EQ(scalar(dirichlet(tape.constant(test::random_matrix(rng, 5, 3)), l)), 0.0);
}

TEST(Dirichlet, NonSquareLaplacianIsDimensionError) {
  ad::Tape tape;
  EXPECT_THROW(dirichlet(tape.constant(Matrix(2, 1)), Matrix(2, 3)), DimensionError);
}

TEST(Dirichlet, DegreeWeightedConstantVanishesOnConnectedGraphs) {
  // The normalized Laplacian annihilates D^{1/2} 1; on a regular graph that is constant.
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix w = test::random_adjacency(rng, 12, 0.6);
    const auto g = graph::graph_from_adjacency(w, "g");
    if (g.isolated_count() > 0) continue;
    Matrix signal(12, 2);
    for (std::size_t r = 0; r < 12; ++r) {
      signal(r, 0) = std::sqrt(g.degree[r]);
      signal(r, 1) = -2.5 * std::sqrt(g.degree[r]);
    }
    ad::Tape tape;
    EXPECT_NEAR(scalar(dirichlet(tape.constant(signal), g.laplacian)), 0.0, 1e-10);
  }
  // Cycle: regular and connected, so plain constant columns vanish.
  Matrix cycle(6, 6);
  for (std::size_t i = 0; i < 6; ++i) cycle(i, (i + 1) % 6) = cycle((i + 1) % 6, i) = 1.0;
  ad::Tape tape;
  EXPECT_NEAR(scalar(dirichlet(tape.constant(Matrix(6, 3, 1.7)), graph::normalized_laplacian(cycle))), 0.0,
              1e-10);
}

TEST(Dirichlet, NonNegativeOnRandomSignals) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix l = graph::normalized_laplacian(test::random_adjacency(rng, 10, 0.3));
    ad::Tape tape;
    EXPECT_GE(scalar(dirichlet(tape.constant(test::random_matrix(rng, 10, 4)), l)), -1e-9);
  }
}

TEST(MaskedFrobenius, Examples) {
  ad::Tape tape;
  const Matrix z{{0, 0}, {0, 0}};
  EXPECT_EQ(scalar(masked_frobenius(tape.constant(z), z, Matrix{{1, 1}, {1, 1}})), 0.0);
  EXPECT_EQ(scalar(masked_frobenius(tape.constant(Matrix{{5, 2}, {1, 1}}), z, Matrix(2, 2))), 0.0);
  EXPECT_EQ(scalar(masked_frobenius(tape.constant(Matrix{{1, 2}, {0, 1}}), z, Matrix{{1, 0}, {0, 1}})),
            2.0);
}

TEST(MaskedFrobenius, NonBinaryMaskIsContractError) {
  ad::Tape tape;
  EXPECT_THROW(masked_frobenius(tape.constant(Matrix(1, 2)), Matrix(1, 2), Matrix{{0.5, 1}}),
               ContractError);
}

TEST(MaskedFrobenius, UnknownEntriesGetNoGradient) {
  ad::Tape tape;
  ad::Var zb = tape.parameter(Matrix{{3, 4}, {5, 6}});
  tape.backward(masked_frobenius(zb, Matrix(2, 2), Matrix{{1, 0}, {0, 1}}));
  EXPECT_EQ(tape.grad(zb), (Matrix{{6, 0}, {0, 12}}));
}

TEST(MaskedCrossEntropy, UniformLogits) {
  ad::Tape tape;
  const Matrix z{{0, 1, 0, 0}};
  const Matrix mask{{0, 1, 1, 1}};
  EXPECT_NEAR(scalar(masked_cross_entropy(tape.constant(Matrix(1, 4)), z, mask)), std::log(3.0), 1e-12);
}

TEST(MaskedCrossEntropy, ConfidentCorrect) {
  ad::Tape tape;
  const Matrix z{{1, 0, 0}};
  const double loss = scalar(masked_cross_entropy(tape.constant(Matrix{{50, 0, 0}}), z, Matrix(1, 3, 1.0)));
  // The exact loss, about 2e-50, rounds to zero next to 1 in double precision.
  EXPECT_GE(loss, 0.0);
  EXPECT_LT(loss, 1e-20);
}

TEST(MaskedCrossEntropy, MeanOverLabeledRows) {
  ad::Tape tape;
  const Matrix logits{{2, -1}, {0.5, 0.25}, {9, 9}};
  const Matrix z{{1, 0}, {0, 1}, {1, 0}};
  const Matrix mask{{1, 1}, {1, 1}, {0, 0}};
  const double row0 = std::log(std::exp(2.0) + std::exp(-1.0)) - 2.0;
  const double row1 = std::log(std::exp(0.5) + std::exp(0.25)) - 0.25;
  EXPECT_NEAR(scalar(masked_cross_entropy(tape.constant(logits), z, mask)), (row0 + row1) / 2.0, 1e-14);
}

TEST(MaskedCrossEntropy, NoLabeledRowsIsContractError) {
  ad::Tape tape;
  EXPECT_THROW(masked_cross_entropy(tape.constant(Matrix(2, 2)), Matrix(2, 2), Matrix(2, 2)),
               ContractError);
}

TEST(MaskedCrossEntropy, PartialLabelBlockIsContractError) {
  ad::Tape tape;
  EXPECT_THROW(masked_cross_entropy(tape.constant(Matrix(2, 3)), Matrix(2, 3),
                                    Matrix{{0, 1, 1}, {0, 1, 0}}),
               ContractError);
}

TEST(MaskPair, RejectsOverlap) {
  MaskPair p{Matrix{{1, 1}}, Matrix{{0, 1}}};
  EXPECT_THROW(p.validate(), ContractError);
}

TEST(LossWeights, Validation) {
  EXPECT_THROW((LossWeights{0, 0, 0}).validate(), ConfigError);
  EXPECT_THROW((LossWeights{-1, 1, 1}).validate(), ConfigError);
  EXPECT_NO_THROW((LossWeights{0, 0, 1}).validate());
}

TEST(MgmcLoss, EqualsTermByTermOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Toy t = make_toy(seed);
    const LossWeights w{0.7, 1.3, 2.1};
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& b : t.branches) vars.push_back(tape.constant(b));
    std::vector<const Matrix*> laps;
    for (const auto& l : t.laplacians) laps.push_back(&l);
    const auto terms = mgmc_loss(vars, tape.constant(t.fused), t.z, t.masks, laps, w);
    EXPECT_NEAR(scalar(terms.total), toy_oracle(t, w), 1e-12);
  }
}

TEST(MgmcLoss, PureClassificationWhenSmoothingOff) {
  const Toy t = make_toy(3);
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& b : t.branches) vars.push_back(tape.constant(b));
  std::vector<const Matrix*> laps;
  for (const auto& l : t.laplacians) laps.push_back(&l);
  const auto terms = mgmc_loss(vars, tape.constant(t.fused), t.z, t.masks, laps, {0, 0, 2.0});
  const double ce = scalar(masked_cross_entropy(tape.constant(t.fused), t.z, t.masks.labels));
  EXPECT_DOUBLE_EQ(scalar(terms.total), 2.0 * ce);
}

TEST(MgmcLoss, SingleGraphWithoutLabelsIsPlainCompletion) {
  const Toy t = make_toy(4);
  ad::Tape tape;
  ad::Var zb = tape.constant(t.branches[0]);
  MaskPair masks{t.masks.features, Matrix(t.z.rows(), t.z.cols())};
  const Matrix* lap = &t.laplacians[0];
  const auto terms = mgmc_loss({&zb, 1}, zb, t.z, masks, {&lap, 1}, {2.0, 2.0, 0.0});
  const double expected = scalar(dirichlet(zb, t.laplacians[0])) +
                          scalar(masked_frobenius(zb, t.z, masks.features));
  EXPECT_NEAR(scalar(terms.total), expected, 1e-12);
}

TEST(MgmcLoss, CountMismatchIsContractError) {
  const Toy t = make_toy(1);
  ad::Tape tape;
  ad::Var zb = tape.constant(t.branches[0]);
  const Matrix* lap = &t.laplacians[0];
  std::vector<ad::Var> two{zb, zb};
  EXPECT_THROW(mgmc_loss(two, zb, t.z, t.masks, {&lap, 1}, {}), ContractError);
}

TEST(MgmcLoss, ZeroingAWeightRemovesExactlyThatGradient) {
  const Toy t = make_toy(7);
  const LossWeights full{0.8, 1.1, 1.7};
  const auto g_full = toy_gradients(t, full);

  // Reference gradient of each single term, computed on its own tape.
  auto term_grad = [&](int which) { return toy_gradients(t, {which == 0 ? 0.8 : 0.0, which == 1 ? 1.1 : 0.0, which == 2 ? 1.7 : 0.0}); };
  const ToyGradients parts[] = {term_grad(0), term_grad(1), term_grad(2)};

  for (int zeroed = 0; zeroed < 3; ++zeroed) {
    LossWeights w = full;
    (zeroed == 0 ? w.dirichlet : zeroed == 1 ? w.reconstruction : w.classification) = 0.0;
    const auto g = toy_gradients(t, w);
    for (std::size_t i = 0; i < g.branches.size(); ++i) {
      const DenseRowMajor removed = g_full.branches[i].dense() - g.branches[i].dense();
      EXPECT_LE((removed - parts[zeroed].branches[i].dense()).cwiseAbs().maxCoeff(), 1e-12);
    }
    const DenseRowMajor removed = g_full.fused.dense() - g.fused.dense();
    EXPECT_LE((removed - parts[zeroed].fused.dense()).cwiseAbs().maxCoeff(), 1e-12);
  }
  // With classification off, the fused prediction receives no gradient at all.
  const auto g = toy_gradients(t, {0.8, 1.1, 0.0});
  EXPECT_EQ(g.fused, Matrix::zeros(t.fused.rows(), t.fused.cols()));
}

TEST(MgmcLoss, MaskedEntriesOfTargetHaveNoInfluence) {
  Toy t = make_toy(9);
  const LossWeights w{0.5, 1.0, 1.0};
  const double before = toy_oracle(t, w);
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& b : t.branches) vars.push_back(tape.constant(b));
  std::vector<const Matrix*> laps;
  for (const auto& l : t.laplacians) laps.push_back(&l);
  Matrix perturbed = t.z;
  for (std::size_t r = 0; r < perturbed.rows(); ++r)
    for (std::size_t c = 0; c < perturbed.cols(); ++c)
      if (t.masks.features(r, c) == 0.0 && t.masks.labels(r, c) == 0.0) perturbed(r, c) += 3.0;
  const auto terms = mgmc_loss(vars, tape.constant(t.fused), perturbed, t.masks, laps, w);
  EXPECT_NEAR(scalar(terms.total), before, 1e-12);
}
