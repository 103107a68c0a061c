#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <gtest/gtest.h>

#include "mgmc/baselines.hpp"
#include "mgmc/csv.hpp"
#include "mgmc/errors.hpp"
#include "mgmc/experiment.hpp"
#include "mgmc/metrics.hpp"
#include "mgmc/synthetic.hpp"
#include "oracles.hpp"

using namespace mgmc;
using namespace mgmc::evaluation;

namespace {

data::MaskedDataset small_synthetic(std::uint64_t seed, std::size_t rows = 60) {
  data::SyntheticSpec spec;
  spec.rows = rows;
  spec.features = 8;
  spec.seed = seed;
  return data::generate_synthetic(spec);
}

ExperimentConfig quick_config() {
  ExperimentConfig config;
  config.levels = {1.0, 0.5};
  config.folds = 2;
  config.seed = 5;
  config.train.epochs = 15;
  config.train.patience = 0;
  config.train.hidden = 8;
  config.train.steps = 2;
  config.lr.epochs = 30;
  config.gcn.epochs = 15;
  config.gcn.hidden = 8;
  config.workers = 2;
  return config;
}

// std::vector<bool> is not contiguous, so copy into a plain array first.
double auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  const auto flags = std::make_unique<bool[]>(positive.size());
  std::copy(positive.begin(), positive.end(), flags.get());
  return metrics::roc_auc_binary(scores, std::span<const bool>(flags.get(), positive.size()));
}

}  // namespace

TEST(Accuracy, Examples) {
  const std::vector<std::size_t> a{0, 1, 1, 0}, b{0, 1, 0, 0}, c{1, 0, 0, 1};
  EXPECT_EQ(metrics::accuracy(a, a), 1.0);
  EXPECT_EQ(metrics::accuracy(a, c), 0.0);
  EXPECT_EQ(metrics::accuracy(a, b), 0.75);
  EXPECT_THROW(metrics::accuracy({}, {}), ContractError);
  EXPECT_THROW(metrics::accuracy(a, std::vector<std::size_t>{0}), ContractError);
}

TEST(Accuracy, MatchesCountingOracle) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> cls(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial * 3;
    std::vector<std::size_t> p(n), t(n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = cls(rng);
      t[i] = cls(rng);
      hits += p[i] == t[i] ? 1 : 0;
    }
    EXPECT_EQ(metrics::accuracy(p, t), static_cast<double>(hits) / static_cast<double>(n));
  }
}

TEST(Accuracy, ArgmaxTiesAndShiftInvariance) {
  const Matrix s{{1.0, 1.0, 0.0}, {0.0, 2.0, 2.0}, {-1.0, -3.0, -0.5}};
  EXPECT_EQ(metrics::argmax_rows(s), (std::vector<std::size_t>{0, 1, 2}));
  Matrix shifted = s;
  for (auto& v : shifted.data()) v += 7.25;
  EXPECT_EQ(metrics::argmax_rows(shifted), metrics::argmax_rows(s));
}

TEST(Auc, PerfectAndTied) {
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  const std::vector<bool> y{false, false, true, true};
  EXPECT_EQ(auc(s, y), 1.0);
  const std::vector<double> flat(4, 0.3);
  EXPECT_EQ(auc(flat, y), 0.5);
  const std::vector<bool> all(4, true);
  EXPECT_THROW(auc(s, all), ContractError);
}

TEST(Auc, EqualsPairCountingExactly) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % 199);
    std::vector<double> scores(n);
    std::vector<bool> positive(n);
    // Coarse scores so ties occur often.
    std::uniform_int_distribution<int> level(0, trial % 2 == 0 ? 5 : 1000);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = level(rng) / 10.0;
      positive[i] = rng() % 2 == 0;
    }
    positive[0] = true;
    positive[1] = false;
    EXPECT_EQ(auc(scores, positive), test::pairwise_auc(scores, positive)) << trial;
  }
}

TEST(Auc, MonotoneTransformInvariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> s(80), t(80);
  std::vector<bool> y(80);
  for (std::size_t i = 0; i < 80; ++i) {
    s[i] = normal(rng);
    t[i] = std::exp(2.0 * s[i]) + 1.0;
    y[i] = normal(rng) + s[i] > 0.0;
  }
  EXPECT_EQ(auc(s, y), auc(t, y));
}

TEST(Auc, MacroOneVsRest) {
  std::mt19937_64 rng(4);
  const Matrix scores = test::random_matrix(rng, 30, 3);
  std::vector<std::size_t> truth(30);
  for (std::size_t i = 0; i < 30; ++i) truth[i] = i % 3;
  double expected = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> s(30);
    std::vector<bool> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      s[i] = scores(i, k);
      y[i] = truth[i] == k;
    }
    expected += test::pairwise_auc(s, y);
  }
  EXPECT_NEAR(metrics::roc_auc(scores, truth), expected / 3.0, 1e-15);

  // Class 2 absent: average over the two present classes only.
  std::vector<std::size_t> two(30);
  for (std::size_t i = 0; i < 30; ++i) two[i] = i % 2;
  double e2 = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> s(30);
    std::vector<bool> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
      s[i] = scores(i, k);
      y[i] = two[i] == k;
    }
    e2 += test::pairwise_auc(s, y);
  }
  EXPECT_NEAR(metrics::roc_auc(scores, two), e2 / 2.0, 1e-15);
  EXPECT_THROW(metrics::roc_auc(scores, std::vector<std::size_t>(30, 1)), ContractError);
}

TEST(MaskedRmse, Examples) {
  const Matrix truth{{1.0, 2.0}, {3.0, 4.0}};
  const Matrix mask{{1.0, 0.0}, {0.0, 0.0}};
  EXPECT_EQ(metrics::masked_rmse(truth, truth, Matrix::ones(2, 2)), 0.0);
  const Matrix off{{3.0, 100.0}, {-5.0, 0.0}};
  EXPECT_EQ(metrics::masked_rmse(off, truth, mask), 2.0);
  EXPECT_FALSE(metrics::masked_rmse(off, truth, Matrix::zeros(2, 2)).has_value());
}

TEST(MaskedRmse, MeanImputationOnStandardizedDataIsAboutOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    data::SyntheticSpec spec;
    spec.seed = seed;
    const auto ds = data::apply_availability(data::assign_splits(data::generate_synthetic(spec), seed), 0.5, seed);
    const auto train = ds.rows_in(data::Split::Train);
    const auto imputed = baselines::mean_impute(ds.standardized_features(), ds.feature_mask(), train);
    const auto rmse = metrics::masked_rmse(imputed.filled, ds.standardize(*ds.ground_truth), ds.held_out_mask());
    ASSERT_TRUE(rmse.has_value());
    EXPECT_NEAR(*rmse, 1.0, 0.1) << "seed " << seed;
  }
}

TEST(Summaries, MedianAndStddev) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  const std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  EXPECT_EQ(stddev(v), 2.0);
}

TEST(Methods, NamesRoundTrip) {
  for (const auto m : all_methods()) EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_EQ(all_methods().size(), 6u);
  EXPECT_THROW(method_from_string("mice"), ConfigError);
}

TEST(Experiment, CellCount) {
  auto config = quick_config();
  config.methods = {Method::LrMean};
  config.levels = {1.0};
  const auto report = run_experiment(small_synthetic(1), config);
  EXPECT_EQ(report.cells.size(), 2u);
  for (const auto& cell : report.cells) {
    EXPECT_FALSE(cell.failed) << cell.error;
    EXPECT_FALSE(cell.rmse.has_value());
    ASSERT_TRUE(cell.accuracy.has_value());
    EXPECT_GE(*cell.accuracy, 0.0);
    EXPECT_LE(*cell.accuracy, 1.0);
  }
}

TEST(Experiment, ByteIdenticalReportsAcrossRuns) {
  auto config = quick_config();
  config.methods = all_methods();
  const auto ds = small_synthetic(2);
  const auto root = std::filesystem::temp_directory_path() / "mgmc_eval_determinism";
  std::filesystem::remove_all(root);
  run_experiment(ds, config).write(root / "a");
  config.workers = 1;
  run_experiment(ds, config).write(root / "b");
  for (const char* file : {"cells.csv", "report.json"}) {
    EXPECT_EQ(csv::read_text(root / "a" / file), csv::read_text(root / "b" / file)) << file;
  }
  std::filesystem::remove_all(root);
}

TEST(Experiment, CellsIndependentOfMethodOrder) {
  auto config = quick_config();
  config.methods = {Method::LrMean, Method::Gmc};
  const auto ds = small_synthetic(3);
  const auto forward = run_experiment(ds, config);
  config.methods = {Method::Gmc, Method::LrMean};
  const auto backward = run_experiment(ds, config);
  ASSERT_EQ(forward.cells.size(), backward.cells.size());
  for (const auto& a : forward.cells) {
    bool found = false;
    for (const auto& b : backward.cells) {
      if (a.method != b.method || a.availability != b.availability || a.fold != b.fold) continue;
      found = true;
      EXPECT_EQ(a.accuracy, b.accuracy);
      EXPECT_EQ(a.auc, b.auc);
      EXPECT_EQ(a.rmse, b.rmse);
    }
    EXPECT_TRUE(found);
  }
}

TEST(Experiment, HeldOutRmseReportedBelowFullAvailability) {
  auto config = quick_config();
  config.methods = {Method::LrKnn, Method::GcnMean};
  const auto report = run_experiment(small_synthetic(4), config);
  for (const auto& cell : report.cells) {
    EXPECT_FALSE(cell.failed) << cell.error;
    EXPECT_EQ(cell.rmse.has_value(), cell.availability < 1.0) << cell.method;
    if (cell.rmse) EXPECT_GE(*cell.rmse, 0.0);
    ASSERT_TRUE(cell.auc.has_value());
    EXPECT_GE(*cell.auc, 0.0);
    EXPECT_LE(*cell.auc, 1.0);
  }
  EXPECT_NE(report.aggregate_json().find("\"median\""), std::string::npos);
  EXPECT_EQ(report.cells_csv().substr(0, report.cells_csv().find('\n')),
            "method,availability,fold,accuracy,auc,rmse,status,error");
}

TEST(Experiment, FailingCellIsRecordedAndRunContinues) {
  auto config = quick_config();
  config.methods = {Method::LrMean, Method::Mgmc};
  config.levels = {1.0};
  config.folds = 1;
  // A non-finite observed value is rejected by every method.
  auto ds = small_synthetic(5, 40);
  ds.raw(0, 0) = std::nan("");
  const auto report = run_experiment(ds, config);
  ASSERT_EQ(report.cells.size(), 2u);
  for (const auto& cell : report.cells) {
    EXPECT_TRUE(cell.failed);
    EXPECT_FALSE(cell.error.empty());
  }
  EXPECT_NE(report.cells_csv().find("failed"), std::string::npos);
}

TEST(Experiment, PrepareFoldSeedsBySum) {
  const auto ds = small_synthetic(6);
  const auto a = prepare_fold(ds, 0.5, 3, 10);
  const auto b = prepare_fold(ds, 0.5, 0, 13);
  EXPECT_EQ(a.split, b.split);
  EXPECT_EQ(a.available, b.available);
}
