#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgmc/dataset.hpp"
#include "mgmc/model.hpp"
#include "mgmc/objective.hpp"
#include "mgmc/population_graph.hpp"

namespace mgmc::training {

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t epochs = 500;
  std::size_t patience = 30;
  std::size_t steps = 10;  // T
  int cheb_order = 3;      // K
  std::size_t hidden = 32;
  double gamma_a = 0.001;  // Dirichlet
  double gamma_b = 0.01;   // reconstruction
  double gamma_c = 1.0;    // classification
  std::uint64_t seed = 0;
  bool autoregressive = false;
  bool cheb_bias = true;
  fusion::AttentionMode attention = fusion::AttentionMode::Additive;
  std::size_t attention_dim = 16;
  bool attention_reads_labels = false;

  // Ranges: learning rate [1e-5, 0.1], K [1, 20], hidden [8, 512], each gamma
  // 0 or [1e-3, 1e3] with at least one positive.
  void validate() const;
  objective::LossWeights loss_weights() const { return {gamma_a, gamma_b, gamma_c}; }
  ModelConfig model_config(const data::MaskedDataset& dataset, std::size_t graphs) const;
};

std::string to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text, TrainConfig defaults = {});

struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0.0;
  double dirichlet = 0.0;
  double reconstruction = 0.0;
  double cross_entropy = 0.0;
  double val_loss = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;

  // epoch,total,dirichlet,frobenius,ce,val_loss
  std::string to_csv() const;
};

struct TrainResult {
  MgmcModel model;
  TrainingLog log;
};

// Cross-entropy of the fused label block over rows of `split`, using their
// true labels. Never reads labels of other splits.
double split_cross_entropy(const MgmcModel& model, const data::MaskedDataset& dataset,
                           std::span<const graph::PopulationGraph> graphs, data::Split split);

// Full-batch transductive training: every row's features enter the graph
// convolutions, only training-row labels enter the loss. Early stopping on
// validation cross-entropy; the best-validation parameters are returned.
TrainResult train(const data::MaskedDataset& dataset, std::span<const graph::PopulationGraph> graphs,
                  const TrainConfig& config);

}  // namespace mgmc::training
