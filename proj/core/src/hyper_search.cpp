#include "mgmc/hyper_search.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mgmc/csv.hpp"
#include "mgmc/errors.hpp"
#include "mgmc/parallel.hpp"
#include "mgmc/params.hpp"

namespace mgmc::training {

void SearchSpace::validate() const {
  if (cheb_order_min < 1 || cheb_order_max > 20 || cheb_order_min > cheb_order_max) {
    throw ConfigError("search space: K range must lie within [1, 20]");
  }
  if (hidden_min < 8 || hidden_max > 512 || hidden_min > hidden_max) {
    throw ConfigError("search space: hidden range must lie within [8, 512]");
  }
  if (!(learning_rate_min >= 1e-5 && learning_rate_max <= 0.1 && learning_rate_min <= learning_rate_max)) {
    throw ConfigError("search space: learning-rate range must lie within [1e-5, 0.1]");
  }
  if (!(gamma_min >= 1e-3 && gamma_max <= 1e3 && gamma_min <= gamma_max)) {
    throw ConfigError("search space: gamma range must lie within [0.001, 1000]");
  }
}

std::vector<TrainConfig> sample_configs(const SearchSpace& space, const TrainConfig& base,
                                        std::size_t budget, std::uint64_t seed) {
  space.validate();
  if (budget == 0) throw ConfigError("search budget must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<int> order(space.cheb_order_min, space.cheb_order_max);
  std::uniform_int_distribution<std::size_t> hidden(space.hidden_min, space.hidden_max);
  auto log_uniform = [&rng](double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::clamp(std::exp(u(rng)), lo, hi);
  };
  std::vector<TrainConfig> out;
  for (std::size_t i = 0; i < budget; ++i) {
    TrainConfig c = base;
    c.cheb_order = order(rng);
    c.hidden = hidden(rng);
    c.learning_rate = log_uniform(space.learning_rate_min, space.learning_rate_max);
    c.gamma_a = log_uniform(space.gamma_min, space.gamma_max);
    c.gamma_b = log_uniform(space.gamma_min, space.gamma_max);
    c.gamma_c = log_uniform(space.gamma_min, space.gamma_max);
    c.seed = seed + i;
    out.push_back(c);
  }
  return out;
}

SearchResult hyper_search(const data::MaskedDataset& ds, std::span<const graph::PopulationGraph> graphs,
                          const SearchSpace& space, const TrainConfig& base, std::size_t budget,
                          std::uint64_t seed, std::size_t workers) {
  const auto configs = sample_configs(space, base, budget, seed);
  SearchResult result;
  result.trials.resize(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t i) {
    Trial& t = result.trials[i];
    t.index = i;
    t.config = configs[i];
    try {
      const auto run = train(ds, graphs, configs[i]);
      t.val_loss = run.log.best_val_loss;
      t.best_epoch = run.log.best_epoch;
    } catch (const Error& e) {
      t.failed = true;
      t.error = e.what();
      t.val_loss = std::numeric_limits<double>::infinity();
    }
  });
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& t : result.trials) {
    if (!t.failed && t.val_loss < best) {
      best = t.val_loss;
      result.best_index = t.index;
      any = true;
    }
  }
  if (!any) throw NumericError("hyper_search: every trial failed");
  result.best = result.trials[result.best_index].config;
  return result;
}

std::string SearchResult::trials_csv() const {
  std::string out = "trial,K,hidden,learning_rate,gamma_a,gamma_b,gamma_c,seed,val_loss,best_epoch,status\n";
  for (const auto& t : trials) {
    out += std::to_string(t.index) + "," + std::to_string(t.config.cheb_order) + "," +
           std::to_string(t.config.hidden) + "," + csv::format_double(t.config.learning_rate) + "," +
           csv::format_double(t.config.gamma_a) + "," + csv::format_double(t.config.gamma_b) + "," +
           csv::format_double(t.config.gamma_c) + "," + std::to_string(t.config.seed) + "," +
           (t.failed ? std::string("inf") : csv::format_double(t.val_loss)) + "," +
           std::to_string(t.best_epoch) + "," + (t.failed ? "failed" : "ok") + "\n";
  }
  return out;
}

}  // namespace mgmc::training
