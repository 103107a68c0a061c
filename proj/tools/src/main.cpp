// mgmc command-line interface.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgmc/baselines.hpp"
#include "mgmc/csv.hpp"
#include "mgmc/dataset.hpp"
#include "mgmc/errors.hpp"
#include "mgmc/experiment.hpp"
#include "mgmc/hyper_search.hpp"
#include "mgmc/logging.hpp"
#include "mgmc/metrics.hpp"
#include "mgmc/synthetic.hpp"
#include "mgmc/trainer.hpp"

namespace fs = std::filesystem;
using namespace mgmc;

namespace {

struct DataArgs {
  std::string dataset;
  std::string schema;
  std::uint64_t seed = 0;
  double level = 1.0;
};

struct TrainArgs {
  std::string config;
  bool autoregressive = false;
  std::optional<std::size_t> epochs;
  std::optional<double> learning_rate;
  std::optional<int> cheb_order;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> steps;
  std::string attention;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool with_level) {
  cmd->add_option("--dataset", a.dataset, "Dataset CSV")->required();
  cmd->add_option("--schema", a.schema, "Schema JSON (default: schema.json next to the dataset)");
  cmd->add_option("--seed", a.seed, "Seed for splits, masking and initialization");
  if (with_level) {
    cmd->add_option("--level", a.level, "Fraction of observed entries kept, in (0, 1]");
  }
}

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--config", a.config, "Training config JSON (e.g. best_config.json)");
  cmd->add_flag("--autoregressive", a.autoregressive, "Feed the running estimate back into the filters");
  cmd->add_option("--epochs", a.epochs, "Maximum epochs");
  cmd->add_option("--lr", a.learning_rate, "Learning rate");
  cmd->add_option("--cheb-order", a.cheb_order, "Chebyshev order K");
  cmd->add_option("--hidden", a.hidden, "LSTM hidden size");
  cmd->add_option("--steps", a.steps, "Recurrent unroll steps T");
  cmd->add_option("--attention", a.attention, "additive | global | query-key");
}

training::TrainConfig make_train_config(const TrainArgs& a, std::uint64_t seed) {
  training::TrainConfig c;
  if (!a.config.empty()) c = training::train_config_from_json(csv::read_text(a.config), c);
  c.seed = seed;
  if (a.autoregressive) c.autoregressive = true;
  if (a.epochs) c.epochs = *a.epochs;
  if (a.learning_rate) c.learning_rate = *a.learning_rate;
  if (a.cheb_order) c.cheb_order = *a.cheb_order;
  if (a.hidden) c.hidden = *a.hidden;
  if (a.steps) c.steps = *a.steps;
  if (!a.attention.empty()) c.attention = fusion::attention_mode_from_string(a.attention);
  c.validate();
  return c;
}

data::MaskedDataset load(const DataArgs& a) {
  fs::path schema = a.schema.empty() ? fs::path(a.dataset).parent_path() / "schema.json" : fs::path(a.schema);
  if (!fs::exists(a.dataset)) throw IoError("dataset not found: " + a.dataset);
  if (!fs::exists(schema)) throw IoError("schema not found: " + schema.string());
  return data::load_csv(a.dataset, data::Schema::load(schema));
}

data::MaskedDataset prepare(const DataArgs& a) {
  return data::apply_availability(data::assign_splits(load(a), a.seed), a.level, a.seed);
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double pct = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      levels.push_back(pct / 100.0);
    } catch (const std::exception&) {
      throw ConfigError("--levels expects comma-separated percentages, got '" + item + "'");
    }
  }
  if (levels.empty()) throw ConfigError("--levels is empty");
  return levels;
}

std::string predictions_csv(const data::MaskedDataset& ds, const Matrix& probabilities) {
  std::vector<std::string> header{"row", "split", "label", "predicted"};
  for (const auto& c : ds.class_names) header.push_back("p_" + c);
  std::string out = csv::join(header) + "\n";
  const auto predicted = metrics::argmax_rows(probabilities);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    std::vector<std::string> row{std::to_string(r), data::to_string(ds.split[r]),
                                 ds.class_names[ds.labels[r]], ds.class_names[predicted[r]]};
    for (std::size_t c = 0; c < ds.classes(); ++c) row.push_back(csv::format_double(probabilities(r, c)));
    out += csv::join(row) + "\n";
  }
  return out;
}

std::string metrics_json(const evaluation::MetricSet& m) {
  nlohmann::ordered_json j;
  j["availability"] = m.availability;
  j["accuracy"] = m.accuracy ? nlohmann::ordered_json(*m.accuracy) : nlohmann::ordered_json(nullptr);
  j["auc"] = m.auc ? nlohmann::ordered_json(*m.auc) : nlohmann::ordered_json(nullptr);
  j["rmse"] = m.rmse ? nlohmann::ordered_json(*m.rmse) : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

int cmd_generate(const data::SyntheticSpec& spec, const std::string& out_dir) {
  const auto ds = data::generate_synthetic(spec);
  data::write_synthetic(ds, out_dir);
  std::cout << "wrote " << ds.rows() << " rows x " << ds.features() << " features to " << out_dir << "\n";
  return 0;
}

int cmd_train(const DataArgs& d, const TrainArgs& t, const std::string& out_dir) {
  const auto ds = prepare(d);
  const auto graphs = data::build_graphs(ds);
  const auto config = make_train_config(t, d.seed);
  const auto result = training::train(ds, graphs, config);
  const auto p = result.model.predict(ds.assemble_z(), graphs);
  const fs::path out(out_dir);
  csv::write_file(out / "training_log.csv", result.log.to_csv());
  result.model.save(out / "model.bin");
  csv::write_file(out / "config.json", training::to_json(config) + "\n");
  csv::write_file(out / "predictions.csv", predictions_csv(ds, p.class_probabilities));
  std::vector<std::string> graph_names;
  for (const auto& g : graphs) graph_names.push_back(g.name);
  csv::write_file(out / "alpha.csv", data::matrix_csv(p.attention, graph_names));
  const Matrix imputed(DenseRowMajor(p.fused.dense().leftCols(static_cast<Eigen::Index>(ds.features()))));
  csv::write_file(out / "imputed.csv", data::matrix_csv(imputed, ds.feature_names));
  auto m = evaluation::score(ds, p.class_probabilities, imputed);
  csv::write_file(out / "metrics.json", metrics_json(m));
  std::cout << "best epoch " << result.log.best_epoch << " of " << result.log.epochs.size()
            << ", validation CE " << csv::format_double(result.log.best_val_loss) << "\n"
            << metrics_json(m);
  return 0;
}

int cmd_impute(const DataArgs& d, const TrainArgs& t, const std::string& method, std::size_t k,
               const std::string& out_dir) {
  const auto ds = prepare(d);
  const auto train_rows = ds.rows_in(data::Split::Train);
  Matrix standardized, imputed_mask;
  if (method == "mean" || method == "knn") {
    const auto r = method == "mean"
                       ? baselines::mean_impute(ds.standardized_features(), ds.feature_mask(), train_rows)
                       : baselines::knn_impute(ds.standardized_features(), ds.feature_mask(), k, train_rows);
    standardized = r.filled;
    imputed_mask = r.imputed;
  } else if (method == "mgmc") {
    const auto graphs = data::build_graphs(ds);
    const auto result = training::train(ds, graphs, make_train_config(t, d.seed));
    const auto p = result.model.predict(ds.assemble_z(), graphs);
    DenseRowMajor filled = ds.standardized_features().dense();
    const DenseRowMajor fused = p.fused.dense().leftCols(static_cast<Eigen::Index>(ds.features()));
    imputed_mask = Matrix::zeros(ds.rows(), ds.features());
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      for (std::size_t c = 0; c < ds.features(); ++c) {
        if (ds.available(r, c) == 0.0) {
          filled(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              fused(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
          imputed_mask(r, c) = 1.0;
        }
      }
    }
    standardized = Matrix(std::move(filled));
  } else {
    throw ConfigError("--method must be mean, knn or mgmc, got '" + method + "'");
  }
  // Back to the raw scale of the input file.
  DenseRowMajor raw = standardized.dense();
  for (std::size_t c = 0; c < ds.features(); ++c) {
    raw.col(static_cast<Eigen::Index>(c)) =
        raw.col(static_cast<Eigen::Index>(c)).array() * ds.stddev[c] + ds.mean[c];
  }
  const fs::path out(out_dir);
  csv::write_file(out / "imputed.csv", data::matrix_csv(Matrix(std::move(raw)), ds.feature_names));
  csv::write_file(out / "imputation_mask.csv", data::matrix_csv(imputed_mask, ds.feature_names));
  if (const auto rmse = metrics::masked_rmse(standardized, ds.standardize(ds.raw), ds.held_out_mask())) {
    std::cout << "held-out RMSE (standardized) " << csv::format_double(*rmse) << "\n";
  }
  return 0;
}

int cmd_evaluate(const DataArgs& d, const TrainArgs& t, const std::string& levels,
                 std::size_t folds, const std::vector<std::string>& methods, std::size_t workers,
                 std::size_t knn_k, const std::string& out_dir) {
  const auto ds = load(d);
  evaluation::ExperimentConfig cfg;
  cfg.levels = parse_levels(levels);
  cfg.folds = folds;
  cfg.seed = d.seed;
  cfg.train = make_train_config(t, d.seed);
  cfg.gcn.seed = d.seed;
  cfg.workers = workers;
  cfg.knn_k = knn_k;
  cfg.methods.clear();
  for (const auto& m : methods) cfg.methods.push_back(evaluation::method_from_string(m));
  if (cfg.methods.empty()) cfg.methods = evaluation::all_methods();
  const auto report = evaluation::run_experiment(ds, cfg);
  report.write(out_dir);
  std::size_t failed = 0;
  for (const auto& c : report.cells) failed += c.failed;
  std::cout << report.cells.size() << " cells (" << failed << " failed) written to " << out_dir << "\n";
  return 0;
}

int cmd_search(const DataArgs& d, const TrainArgs& t, std::size_t budget, std::size_t workers,
               const std::string& out_dir) {
  const auto ds = prepare(d);
  const auto graphs = data::build_graphs(ds);
  training::SearchSpace space;
  const auto result =
      training::hyper_search(ds, graphs, space, make_train_config(t, d.seed), budget, d.seed, workers);
  const fs::path out(out_dir);
  csv::write_file(out / "trials.csv", result.trials_csv());
  csv::write_file(out / "best_config.json", training::to_json(result.best) + "\n");
  std::cout << "best trial " << result.best_index << " validation CE "
            << csv::format_double(result.trials[result.best_index].val_loss) << "\n";
  return 0;
}

std::string format_cell(const nlohmann::json& metric) {
  if (metric.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f+-%.3f", metric.at("median").get<double>(),
                metric.at("std").get<double>());
  return buf;
}

int cmd_report(const std::string& in_dir) {
  const fs::path path = fs::path(in_dir) / "report.json";
  if (!fs::exists(path)) throw IoError("no report.json in " + in_dir);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed report.json: ") + e.what());
  }
  std::printf("%-22s %-8s %-16s %-16s %-16s %s\n", "method", "level", "accuracy", "auc", "rmse", "failed");
  for (const auto& [method, levels] : j.at("results").items()) {
    for (const auto& [level, cell] : levels.items()) {
      std::printf("%-22s %-8s %-16s %-16s %-16s %d\n", method.c_str(), level.c_str(),
                  format_cell(cell.at("accuracy")).c_str(), format_cell(cell.at("auc")).c_str(),
                  format_cell(cell.at("rmse")).c_str(), cell.at("failed").get<int>());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-graph geometric matrix completion"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress at info level");

  data::SyntheticSpec spec;
  std::string out_dir = ".";
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset with ground truth");
  gen->add_option("--rows", spec.rows);
  gen->add_option("--features", spec.features);
  gen->add_option("--classes", spec.classes);
  gen->add_option("--rank", spec.rank);
  gen->add_option("--noise", spec.noise);
  gen->add_option("--meta", spec.meta_features, "Number of meta-features (graphs)");
  gen->add_option("--fidelity", spec.meta_fidelity, "Probability a meta value equals the cluster id");
  gen->add_option("--separation", spec.separation, "Scale of the cluster offsets");
  gen->add_option("--seed", spec.seed);
  gen->add_option("--out-dir", out_dir)->required();

  DataArgs train_data;
  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train the multi-graph model on one split");
  add_data_options(tr, train_data, true);
  add_train_options(tr, train_args);
  tr->add_option("--out-dir", out_dir)->required();

  DataArgs imp_data;
  TrainArgs imp_train;
  std::string imp_method = "mean";
  std::size_t knn_k = 5;
  auto* imp = app.add_subcommand("impute", "Fill missing feature entries");
  add_data_options(imp, imp_data, true);
  add_train_options(imp, imp_train);
  imp->add_option("--method", imp_method, "mean | knn | mgmc");
  imp->add_option("--k", knn_k, "Neighbours for knn");
  imp->add_option("--out-dir", out_dir)->required();

  DataArgs eval_data;
  TrainArgs eval_train;
  std::string levels = "100,75,50,25";
  std::size_t folds = 10;
  std::vector<std::string> methods;
  std::size_t workers = 0;
  auto* ev = app.add_subcommand("evaluate", "Repeated-split experiment over availability levels");
  add_data_options(ev, eval_data, false);
  add_train_options(ev, eval_train);
  ev->add_option("--levels", levels, "Availability percentages");
  ev->add_option("--folds", folds);
  ev->add_option("--method", methods, "Methods (repeatable or comma separated; default all)")
      ->delimiter(',');
  ev->add_option("--workers", workers, "Worker threads (0 = all cores)");
  ev->add_option("--k", knn_k, "Neighbours for lr+knn");
  ev->add_option("--out-dir", out_dir)->required();

  DataArgs search_data;
  TrainArgs search_train;
  std::size_t budget = 20;
  auto* se = app.add_subcommand("search", "Random hyperparameter search");
  add_data_options(se, search_data, true);
  add_train_options(se, search_train);
  se->add_option("--budget", budget, "Number of trials");
  se->add_option("--workers", workers);
  se->add_option("--out-dir", out_dir)->required();

  std::string in_dir;
  auto* rep = app.add_subcommand("report", "Print the aggregated table of an evaluate run");
  rep->add_option("--in-dir", in_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::Config);
  }
  if (verbose) log::set_level(log::Level::Info);

  try {
    if (*gen) return cmd_generate(spec, out_dir);
    if (*tr) return cmd_train(train_data, train_args, out_dir);
    if (*imp) return cmd_impute(imp_data, imp_train, imp_method, knn_k, out_dir);
    if (*ev) return cmd_evaluate(eval_data, eval_train, levels, folds, methods, workers, knn_k, out_dir);
    if (*se) return cmd_search(search_data, search_train, budget, workers, out_dir);
    if (*rep) return cmd_report(in_dir);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  }
  return 0;
}
