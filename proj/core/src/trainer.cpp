#include "mgmc/trainer.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "mgmc/adam.hpp"
#include "mgmc/csv.hpp"
#include "mgmc/errors.hpp"

namespace mgmc::training {

namespace {

void check_gamma(double g, const char* name) {
  if (g == 0.0) return;
  if (!(g >= 1e-3 && g <= 1e3)) {
    throw ConfigError(std::string(name) + " must be 0 or within [0.001, 1000], got " +
                      std::to_string(g));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 1e-5 && learning_rate <= 0.1)) {
    throw ConfigError("learning_rate must be within [1e-5, 0.1], got " + std::to_string(learning_rate));
  }
  if (cheb_order < 1 || cheb_order > 20) {
    throw ConfigError("K must be within [1, 20], got " + std::to_string(cheb_order));
  }
  if (hidden < 8 || hidden > 512) {
    throw ConfigError("hidden must be within [8, 512], got " + std::to_string(hidden));
  }
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (steps == 0) throw ConfigError("unroll steps must be >= 1");
  check_gamma(gamma_a, "gamma_a");
  check_gamma(gamma_b, "gamma_b");
  check_gamma(gamma_c, "gamma_c");
  loss_weights().validate();
}

ModelConfig TrainConfig::model_config(const data::MaskedDataset& ds, std::size_t graphs) const {
  ModelConfig mc;
  mc.features = ds.features();
  mc.classes = ds.classes();
  mc.graphs = graphs;
  mc.cheb_order = cheb_order;
  mc.hidden = hidden;
  mc.steps = steps;
  mc.autoregressive = autoregressive;
  mc.cheb_bias = cheb_bias;
  mc.attention = attention;
  mc.attention_dim = attention_dim;
  mc.attention_reads_labels = attention_reads_labels;
  return mc;
}

std::string to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["steps"] = c.steps;
  j["cheb_order"] = c.cheb_order;
  j["hidden"] = c.hidden;
  j["gamma_a"] = c.gamma_a;
  j["gamma_b"] = c.gamma_b;
  j["gamma_c"] = c.gamma_c;
  j["seed"] = c.seed;
  j["autoregressive"] = c.autoregressive;
  j["cheb_bias"] = c.cheb_bias;
  j["attention"] = fusion::to_string(c.attention);
  j["attention_dim"] = c.attention_dim;
  j["attention_reads_labels"] = c.attention_reads_labels;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text, TrainConfig c) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.patience = j.value("patience", c.patience);
    c.steps = j.value("steps", c.steps);
    c.cheb_order = j.value("cheb_order", c.cheb_order);
    c.hidden = j.value("hidden", c.hidden);
    c.gamma_a = j.value("gamma_a", c.gamma_a);
    c.gamma_b = j.value("gamma_b", c.gamma_b);
    c.gamma_c = j.value("gamma_c", c.gamma_c);
    c.seed = j.value("seed", c.seed);
    c.autoregressive = j.value("autoregressive", c.autoregressive);
    c.cheb_bias = j.value("cheb_bias", c.cheb_bias);
    if (j.contains("attention")) c.attention = fusion::attention_mode_from_string(j.at("attention"));
    c.attention_dim = j.value("attention_dim", c.attention_dim);
    c.attention_reads_labels = j.value("attention_reads_labels", c.attention_reads_labels);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed training config: ") + e.what());
  }
  return c;
}

std::string TrainingLog::to_csv() const {
  std::string out = "epoch,total,dirichlet,frobenius,ce,val_loss\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + "," + csv::format_double(e.total) + "," +
           csv::format_double(e.dirichlet) + "," + csv::format_double(e.reconstruction) + "," +
           csv::format_double(e.cross_entropy) + "," + csv::format_double(e.val_loss) + "\n";
  }
  return out;
}

double split_cross_entropy(const MgmcModel& model, const data::MaskedDataset& ds,
                           std::span<const graph::PopulationGraph> graphs, data::Split split) {
  const auto p = model.predict(ds.assemble_z(), graphs);
  ad::Tape tape;
  return objective::masked_cross_entropy(tape.constant(p.fused), ds.label_targets(split),
                                         ds.label_mask(split))
      .value()(0, 0);
}

TrainResult train(const data::MaskedDataset& ds, std::span<const graph::PopulationGraph> graphs,
                  const TrainConfig& config) {
  config.validate();
  ds.validate();
  if (graphs.empty()) throw ContractError("train: at least one graph is required");
  for (const auto& g : graphs) {
    if (g.n != ds.rows()) throw DimensionError("train: graph '" + g.name + "' node count != rows");
  }
  const auto train_rows = ds.rows_in(data::Split::Train);
  std::vector<bool> seen(ds.classes(), false);
  for (std::size_t r : train_rows) seen[ds.labels[r]] = true;
  for (std::size_t k = 0; k < ds.classes(); ++k) {
    if (!seen[k]) throw DataError("class '" + ds.class_names[k] + "' has no labeled training rows");
  }

  const Matrix z = ds.assemble_z();
  const objective::MaskPair masks = ds.masks();
  const bool has_val = !ds.rows_in(data::Split::Val).empty();
  const Matrix val_targets = ds.label_targets(data::Split::Val);
  const Matrix val_mask = ds.label_mask(data::Split::Val);
  std::vector<const Matrix*> laplacians, rescaled;
  for (const auto& g : graphs) {
    laplacians.push_back(&g.laplacian);
    rescaled.push_back(&g.rescaled);
  }

  TrainResult result{MgmcModel::create(config.model_config(ds, graphs.size()), config.seed), {}};
  MgmcModel& model = result.model;
  Adam adam;
  std::vector<Matrix> best_params(model.params().values().begin(), model.params().values().end());
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const auto weights = config.loss_weights();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape tape;
    const BoundParams bound = bind(tape, model.params());
    const auto fwd = model.forward(tape, bound, rescaled, tape.constant(z));
    const auto terms =
        objective::mgmc_loss(fwd.branch_outputs, fwd.fused, z, masks, laplacians, weights);

    // Validation on the pre-update parameters, from the same forward pass.
    double val = terms.total.value()(0, 0);
    if (has_val) {
      ad::Tape vt;
      val = objective::masked_cross_entropy(vt.constant(fwd.fused.value()), val_targets, val_mask)
                .value()(0, 0);
    }
    EpochRecord rec{epoch, terms.total.value()(0, 0), terms.dirichlet, terms.reconstruction,
                    terms.cross_entropy, val};
    if (!std::isfinite(rec.total) || !std::isfinite(rec.val_loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    result.log.epochs.push_back(rec);
    if (val < best) {
      best = val;
      result.log.best_epoch = epoch;
      since_best = 0;
      std::copy(model.params().values().begin(), model.params().values().end(), best_params.begin());
    } else if (++since_best >= config.patience && config.patience > 0) {
      result.log.early_stopped = true;
      break;
    }

    tape.backward(terms.total);
    const auto grads = gradients(tape, bound);
    adam.step(model.params().values(), grads, config.learning_rate, epoch);
  }
  std::copy(best_params.begin(), best_params.end(), model.params().values().begin());
  result.log.best_val_loss = best;
  return result;
}

}  // namespace mgmc::training
