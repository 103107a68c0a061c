#include "mgmc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "mgmc/csv.hpp"
#include "mgmc/errors.hpp"
#include "mgmc/metrics.hpp"
#include "mgmc/parallel.hpp"

namespace mgmc::evaluation {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::Mgmc, "mgmc"},       {Method::MgmcAutoregressive, "mgmc-autoregressive"},
    {Method::Gmc, "gmc"},         {Method::GcnMean, "gcn+mean"},
    {Method::LrMean, "lr+mean"},  {Method::LrKnn, "lr+knn"},
};

Matrix feature_block(const Matrix& fused, std::size_t m) {
  return Matrix(DenseRowMajor(fused.dense().leftCols(static_cast<Eigen::Index>(m))));
}

Matrix concat(const Matrix& a, const Matrix& b) {
  DenseRowMajor out(a.rows(), a.cols() + b.cols());
  out << a.dense(), b.dense();
  return Matrix(std::move(out));
}

MethodOutcome run_mgmc(const data::MaskedDataset& ds, std::span<const graph::PopulationGraph> graphs,
                       training::TrainConfig cfg, bool autoregressive) {
  cfg.autoregressive = autoregressive;
  auto result = training::train(ds, graphs, cfg);
  const auto p = result.model.predict(ds.assemble_z(), graphs);
  MethodOutcome out;
  out.probabilities = p.class_probabilities;
  out.imputed = feature_block(p.fused, ds.features());
  const auto values = result.model.params().values();
  out.parameters.assign(values.begin(), values.end());
  return out;
}

std::string level_key(double level) { return csv::format_double(level); }

std::string optional_field(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

const char* to_string(Method method) noexcept {
  for (const auto& [m, name] : kMethodNames)
    if (m == method) return name;
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (const auto& [m, n] : kMethodNames)
    if (name == n) return m;
  throw ConfigError("unknown method '" + name +
                    "' (expected mgmc, mgmc-autoregressive, gmc, gcn+mean, lr+mean or lr+knn)");
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& entry : kMethodNames) out.push_back(entry.first);
  return out;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("experiment: no methods");
  if (levels.empty()) throw ConfigError("experiment: no availability levels");
  for (double l : levels) {
    if (!(l > 0.0 && l <= 1.0)) throw ConfigError("availability level must be in (0, 1], got " + std::to_string(l));
  }
  if (folds == 0) throw ConfigError("experiment: folds must be >= 1");
  if (knn_k == 0) throw ConfigError("experiment: knn k must be >= 1");
  train.validate();
}

std::string ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  std::vector<std::string> names;
  for (Method m : methods) names.emplace_back(evaluation::to_string(m));
  j["methods"] = names;
  j["levels"] = levels;
  j["folds"] = folds;
  j["seed"] = seed;
  j["train"] = nlohmann::ordered_json::parse(training::to_json(train));
  j["lr"] = {{"learning_rate", lr.learning_rate}, {"epochs", lr.epochs},
             {"patience", lr.patience}, {"l2", lr.l2}};
  j["gcn"] = {{"cheb_order", gcn.cheb_order}, {"hidden", gcn.hidden},
              {"learning_rate", gcn.learning_rate}, {"epochs", gcn.epochs},
              {"patience", gcn.patience}, {"bias", gcn.bias}, {"seed", gcn.seed}};
  j["knn_k"] = knn_k;
  return j.dump(2);
}

data::MaskedDataset prepare_fold(const data::MaskedDataset& dataset, double level, std::size_t fold,
                                 std::uint64_t seed) {
  auto split = data::assign_splits(dataset, seed + fold);
  return data::apply_availability(std::move(split), level, seed + fold);
}

MetricSet score(const data::MaskedDataset& ds, const Matrix& probabilities,
                const Matrix& imputed_standardized) {
  MetricSet s;
  s.availability = ds.availability;
  const auto test = ds.rows_in(data::Split::Test);
  if (!test.empty()) {
    DenseRowMajor test_scores(test.size(), probabilities.cols());
    std::vector<std::size_t> truth;
    for (std::size_t i = 0; i < test.size(); ++i) {
      test_scores.row(static_cast<Eigen::Index>(i)) = probabilities.dense().row(static_cast<Eigen::Index>(test[i]));
      truth.push_back(ds.labels[test[i]]);
    }
    const Matrix ts(std::move(test_scores));
    s.accuracy = metrics::accuracy(metrics::argmax_rows(ts), truth);
    std::vector<std::size_t> present(truth);
    std::sort(present.begin(), present.end());
    if (std::unique(present.begin(), present.end()) - present.begin() >= 2) {
      s.auc = metrics::roc_auc(ts, truth);
    }
  }
  s.rmse = metrics::masked_rmse(imputed_standardized, ds.standardize(ds.raw), ds.held_out_mask());
  return s;
}

MethodOutcome run_method(Method method, const data::MaskedDataset& ds,
                         std::span<const graph::PopulationGraph> graphs,
                         const ExperimentConfig& config) {
  MethodOutcome out;
  const auto train_rows = ds.rows_in(data::Split::Train);
  const auto val_rows = ds.rows_in(data::Split::Val);
  switch (method) {
    case Method::Mgmc:
      out = run_mgmc(ds, graphs, config.train, config.train.autoregressive);
      break;
    case Method::MgmcAutoregressive:
      out = run_mgmc(ds, graphs, config.train, true);
      break;
    case Method::Gmc: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < graphs.size(); ++g) {
        auto single = run_mgmc(ds, graphs.subspan(g, 1), config.train, config.train.autoregressive);
        // Validation cross-entropy of the predicted class distribution.
        double ce = 0.0;
        for (std::size_t r : val_rows) ce -= std::log(std::max(single.probabilities(r, ds.labels[r]), 1e-300));
        if (!val_rows.empty()) ce /= static_cast<double>(val_rows.size());
        if (g == 0 || ce < best) {
          best = ce;
          out = std::move(single);
          out.chosen_graph = g;
        }
      }
      break;
    }
    case Method::GcnMean: {
      const auto imputed = baselines::mean_impute(ds.standardized_features(), ds.feature_mask(), train_rows);
      const auto combined = graph::combine_graphs(graphs, "combined");
      const auto model = baselines::fit_gcn_classifier(imputed.filled, combined, ds.labels, ds.classes(),
                                                       train_rows, val_rows, config.gcn);
      out.probabilities = model.predict_proba(imputed.filled, combined.rescaled);
      out.imputed = imputed.filled;
      const auto values = model.params().values();
      out.parameters.assign(values.begin(), values.end());
      break;
    }
    case Method::LrMean:
    case Method::LrKnn: {
      const Matrix x = ds.standardized_features();
      const auto imputed = method == Method::LrMean
                               ? baselines::mean_impute(x, ds.feature_mask(), train_rows)
                               : baselines::knn_impute(x, ds.feature_mask(), config.knn_k, train_rows);
      const Matrix features = concat(imputed.filled, ds.standardized_meta());
      auto model = baselines::fit_softmax_regression(features, ds.labels, ds.classes(), train_rows,
                                                     val_rows, config.lr);
      out.probabilities = model.predict_proba(features);
      out.imputed = imputed.filled;
      const auto values = model.params().values();
      out.parameters.assign(values.begin(), values.end());
      break;
    }
  }
  out.test_rows = ds.rows_in(data::Split::Test);
  out.metrics = score(ds, out.probabilities, out.imputed);
  out.metrics.method = to_string(method);
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double stddev(std::span<const double> values) {
  if (values.empty()) throw ContractError("stddev of an empty set");
  double mu = 0.0;
  for (double v : values) mu += v;
  mu /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

std::string ExperimentReport::cells_csv() const {
  std::string out = "method,availability,fold,accuracy,auc,rmse,status,error\n";
  for (const auto& c : cells) {
    out += csv::join({c.method, csv::format_double(c.availability), std::to_string(c.fold),
                      optional_field(c.accuracy), optional_field(c.auc), optional_field(c.rmse),
                      c.failed ? "failed" : "ok", c.error}) +
           "\n";
  }
  return out;
}

std::string ExperimentReport::aggregate_json() const {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["config"] = nlohmann::ordered_json::parse(config.to_json());
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  for (Method m : config.methods) {
    const std::string name = to_string(m);
    nlohmann::ordered_json per_level = nlohmann::ordered_json::object();
    for (double level : config.levels) {
      std::map<std::string, std::vector<double>> values;
      std::size_t failed = 0;
      for (const auto& c : cells) {
        if (c.method != name || c.availability != level) continue;
        if (c.failed) {
          ++failed;
          continue;
        }
        if (c.accuracy) values["accuracy"].push_back(*c.accuracy);
        if (c.auc) values["auc"].push_back(*c.auc);
        if (c.rmse) values["rmse"].push_back(*c.rmse);
      }
      nlohmann::ordered_json cell = nlohmann::ordered_json::object();
      for (const char* metric : {"accuracy", "auc", "rmse"}) {
        const auto it = values.find(metric);
        if (it == values.end() || it->second.empty()) {
          cell[metric] = nullptr;
          continue;
        }
        cell[metric] = {{"median", median(it->second)},
                        {"std", stddev(it->second)},
                        {"n", it->second.size()}};
      }
      cell["failed"] = failed;
      per_level[level_key(level)] = cell;
    }
    results[name] = per_level;
  }
  j["results"] = results;
  return j.dump(2) + "\n";
}

void ExperimentReport::write(const std::filesystem::path& dir) const {
  csv::write_file(dir / "cells.csv", cells_csv());
  csv::write_file(dir / "report.json", aggregate_json());
}

ExperimentReport run_experiment(const data::MaskedDataset& dataset, const ExperimentConfig& config) {
  config.validate();
  dataset.validate();
  ExperimentReport report;
  report.config = config;
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_cells = config.levels.size() * config.folds * n_methods;
  report.cells.resize(n_cells);
  parallel_for(n_cells, config.workers, [&](std::size_t idx) {
    const std::size_t mi = idx % n_methods;
    const std::size_t fold = (idx / n_methods) % config.folds;
    const std::size_t li = idx / (n_methods * config.folds);
    const Method method = config.methods[mi];
    MetricSet cell;
    try {
      const auto ds = prepare_fold(dataset, config.levels[li], fold, config.seed);
      const auto graphs = data::build_graphs(ds);
      cell = run_method(method, ds, graphs, config).metrics;
    } catch (const std::exception& e) {
      cell = MetricSet{};
      cell.failed = true;
      cell.error = e.what();
    }
    cell.method = to_string(method);
    cell.availability = config.levels[li];
    cell.fold = fold;
    report.cells[idx] = std::move(cell);
  });
  return report;
}

}  // namespace mgmc::evaluation
