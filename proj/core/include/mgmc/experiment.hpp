#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgmc/baselines.hpp"
#include "mgmc/dataset.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/trainer.hpp"

namespace mgmc::evaluation {

enum class Method { Mgmc, MgmcAutoregressive, Gmc, GcnMean, LrMean, LrKnn };

const char* to_string(Method method) noexcept;
// Accepts "mgmc", "mgmc-autoregressive", "gmc", "gcn+mean", "lr+mean", "lr+knn".
Method method_from_string(const std::string& name);
std::vector<Method> all_methods();

struct MetricSet {
  std::string method;
  double availability = 1.0;
  std::size_t fold = 0;
  std::optional<double> accuracy;
  std::optional<double> auc;
  std::optional<double> rmse;  // absent when nothing was held out
  bool failed = false;
  std::string error;
};

struct ExperimentConfig {
  std::vector<Method> methods{Method::Mgmc};
  std::vector<double> levels{1.0, 0.75, 0.5, 0.25};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  training::TrainConfig train;  // shared by mgmc, mgmc-autoregressive and gmc
  baselines::SoftmaxRegressionConfig lr;
  baselines::GcnConfig gcn;
  std::size_t knn_k = 5;
  std::size_t workers = 0;  // 0 = hardware concurrency

  void validate() const;
  std::string to_json() const;
};

// Everything one method produced on one prepared dataset.
struct MethodOutcome {
  Matrix probabilities;  // n x c
  Matrix imputed;        // n x m, standardized scale
  std::vector<std::size_t> test_rows;
  MetricSet metrics;
  // Trained parameters of the model-based methods, for ablation comparisons.
  std::vector<Matrix> parameters;
  // For gmc: index of the graph that won on validation cross-entropy.
  std::optional<std::size_t> chosen_graph;
};

// `dataset` must already carry splits and availability; `graphs` are built
// from its meta-features. Scores test rows and held-out entries.
MethodOutcome run_method(Method method, const data::MaskedDataset& dataset,
                         std::span<const graph::PopulationGraph> graphs,
                         const ExperimentConfig& config);

// Test-row accuracy/AUC and held-out RMSE on the standardized scale.
MetricSet score(const data::MaskedDataset& dataset, const Matrix& probabilities,
                const Matrix& imputed_standardized);

// Fold f uses split seed and availability seed `seed + f`.
data::MaskedDataset prepare_fold(const data::MaskedDataset& dataset, double level, std::size_t fold,
                                 std::uint64_t seed);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<MetricSet> cells;  // ordered by (level, fold, method) of the config

  // method,availability,fold,accuracy,auc,rmse,status,error
  std::string cells_csv() const;
  // {"seed", "config", "results": {method: {level: {metric: {median, std, n}}}}}
  std::string aggregate_json() const;
  // cells.csv and report.json in `dir`.
  void write(const std::filesystem::path& dir) const;
};

// Every (level, fold, method) cell runs on a worker pool; a cell that throws is
// recorded as failed and the run continues.
ExperimentReport run_experiment(const data::MaskedDataset& dataset, const ExperimentConfig& config);

double median(std::vector<double> values);
// Population standard deviation (ddof = 0).
double stddev(std::span<const double> values);

}  // namespace mgmc::evaluation
