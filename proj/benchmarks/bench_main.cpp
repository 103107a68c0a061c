#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "mgmc/adam.hpp"
#include "mgmc/baselines.hpp"
#include "mgmc/dataset.hpp"
#include "mgmc/experiment.hpp"
#include "mgmc/logging.hpp"
#include "mgmc/model.hpp"
#include "mgmc/objective.hpp"
#include "mgmc/spectral_filter.hpp"
#include "mgmc/synthetic.hpp"
#include "mgmc/tape.hpp"
#include "mgmc/trainer.hpp"

using namespace mgmc;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = normal(rng);
  return m;
}

// Prepared synthetic fold of the benchmark size used throughout the docs.
struct Problem {
  data::MaskedDataset dataset;
  std::vector<graph::PopulationGraph> graphs;
};

Problem make_problem(std::size_t rows) {
  log::set_level(log::Level::Off);
  data::SyntheticSpec spec;
  spec.rows = rows;
  auto ds = evaluation::prepare_fold(data::generate_synthetic(spec), 0.5, 0, 0);
  auto graphs = data::build_graphs(ds);
  return {std::move(ds), std::move(graphs)};
}

void BM_TapeMatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, 64, 2);
  for (auto _ : state) {
    ad::Tape tape;
    auto va = tape.parameter(a), vb = tape.parameter(b);
    tape.backward(ad::sum(ad::matmul(va, vb)));
    benchmark::DoNotOptimize(tape.grad(va));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TapeMatmulBackward)->RangeMultiplier(2)->Range(64, 512)->Complexity();

void BM_ChebBasis(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  const Matrix z = p.dataset.assemble_z();
  const int order = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::cheb_basis(p.graphs[0].rescaled, z, order));
}
BENCHMARK(BM_ChebBasis)->ArgsProduct({{150, 300, 600}, {3, 10}});

void BM_ModelForwardBackward(benchmark::State& state) {
  const auto p = make_problem(300);
  training::TrainConfig config;
  config.steps = static_cast<std::size_t>(state.range(0));
  const auto model = MgmcModel::create(config.model_config(p.dataset, p.graphs.size()), 0);
  const Matrix z = p.dataset.assemble_z();
  const auto masks = p.dataset.masks();
  std::vector<const Matrix*> laplacians, rescaled;
  for (const auto& g : p.graphs) {
    laplacians.push_back(&g.laplacian);
    rescaled.push_back(&g.rescaled);
  }
  for (auto _ : state) {
    ad::Tape tape;
    const auto bound = bind(tape, model.params());
    const auto f = model.forward(tape, bound, rescaled, tape.constant(z));
    const auto loss = objective::mgmc_loss(f.branch_outputs, f.fused, z, masks, laplacians, config.loss_weights());
    tape.backward(loss.total);
    benchmark::DoNotOptimize(gradients(tape, bound));
  }
}
BENCHMARK(BM_ModelForwardBackward)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_TrainingEpochs(benchmark::State& state) {
  const auto p = make_problem(300);
  training::TrainConfig config;
  config.epochs = 10;
  config.patience = 0;
  for (auto _ : state) benchmark::DoNotOptimize(training::train(p.dataset, p.graphs, config));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_TrainingEpochs)->Unit(benchmark::kMillisecond);

void BM_KnnImpute(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  const auto train_rows = p.dataset.rows_in(data::Split::Train);
  const Matrix x = p.dataset.standardized_features(), mask = p.dataset.feature_mask();
  for (auto _ : state) benchmark::DoNotOptimize(baselines::knn_impute(x, mask, 5, train_rows));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnImpute)->RangeMultiplier(2)->Range(150, 1200)->Complexity()->Unit(benchmark::kMillisecond);

void BM_GraphConstruction(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_graph(p.dataset.meta[0]));
}
BENCHMARK(BM_GraphConstruction)->RangeMultiplier(2)->Range(150, 1200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
