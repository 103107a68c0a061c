#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgmc/dataset.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/trainer.hpp"

namespace mgmc::training {

// Integer ranges are inclusive. Learning rate and gammas are sampled
// log-uniformly, K and hidden uniformly.
struct SearchSpace {
  int cheb_order_min = 1;
  int cheb_order_max = 19;
  std::size_t hidden_min = 8;
  std::size_t hidden_max = 511;
  double learning_rate_min = 1e-5;
  double learning_rate_max = 0.1;
  double gamma_min = 1e-3;
  double gamma_max = 1e3;

  void validate() const;
};

struct Trial {
  std::size_t index = 0;
  TrainConfig config;
  double val_loss = 0.0;
  std::size_t best_epoch = 0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  TrainConfig best;
  std::size_t best_index = 0;
  std::vector<Trial> trials;

  // trial,K,hidden,learning_rate,gamma_a,gamma_b,gamma_c,seed,val_loss,best_epoch,status
  std::string trials_csv() const;
};

// `budget` configs drawn from one RNG seeded with `seed`; fields outside the
// space (epochs, patience, T, flags) come from `base`. Trial i trains with
// seed + i.
std::vector<TrainConfig> sample_configs(const SearchSpace& space, const TrainConfig& base,
                                        std::size_t budget, std::uint64_t seed);

// Trials run on a worker pool and are merged by index; the config with the
// lowest validation loss wins (ties: lowest index).
SearchResult hyper_search(const data::MaskedDataset& dataset,
                          std::span<const graph::PopulationGraph> graphs, const SearchSpace& space,
                          const TrainConfig& base, std::size_t budget, std::uint64_t seed,
                          std::size_t workers = 0);

}  // namespace mgmc::training
