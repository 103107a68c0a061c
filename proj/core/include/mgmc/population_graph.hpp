#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgmc/matrix.hpp"

namespace mgmc::graph {

// One auxiliary per-row attribute used to connect rows. Categorical values are
// integer codes and always compare by equality.
struct MetaFeature {
  std::string name;
  std::vector<std::optional<double>> values;
  double threshold = 0.0;
  bool categorical = false;
};

struct PopulationGraph {
  std::string name;
  std::size_t n = 0;
  Matrix adjacency;
  std::vector<double> degree;
  Matrix laplacian;  // I - D^-1/2 W D^-1/2, zero rows for isolated nodes
  Matrix rescaled;   // 2 L / lambda_max - I
  double lambda_max = 0.0;

  std::size_t edge_count() const;
  std::size_t isolated_count() const;
};

// W(i,j) = 1 iff i != j and |M(i) - M(j)| <= threshold (equality for categorical).
Matrix similarity_adjacency(const MetaFeature& meta);

PopulationGraph build_graph(const MetaFeature& meta);

// Graph from an arbitrary symmetric non-negative adjacency with zero diagonal.
PopulationGraph graph_from_adjacency(Matrix adjacency, std::string name);

// Sum of adjacencies; edge weights count how many graphs connect the pair.
PopulationGraph combine_graphs(std::span<const PopulationGraph> graphs, std::string name);

Matrix normalized_laplacian(const Matrix& adjacency);

struct RescaledLaplacian {
  Matrix rescaled;
  double lambda_max = 0.0;
  std::size_t iterations = 0;
};

struct PowerIterationOptions {
  double tolerance = 1e-9;
  std::size_t max_iterations = 1000;
};

// Largest eigenvalue of a symmetric PSD matrix by power iteration. Converged
// when the eigen-residual ||L v - lambda v|| drops below tolerance * max(1, lambda).
std::pair<double, std::size_t> largest_eigenvalue(const Matrix& sym,
                                                  const PowerIterationOptions& opts = {});

// lambda_max from power iteration; when it does not converge, from a dense
// symmetric eigensolver instead. Edgeless graphs give L~ = -I.
RescaledLaplacian rescale_laplacian(const Matrix& laplacian,
                                    const PowerIterationOptions& opts = {});

// "i j" per undirected edge (i < j), one per line.
std::string edge_list(const PopulationGraph& graph);
// JSON object {name, n, edges, isolated, lambda_max, degree_histogram}.
std::string summary_json(const PopulationGraph& graph);
void export_graph(const PopulationGraph& graph, const std::filesystem::path& edge_list_path,
                  const std::filesystem::path& summary_path);

}  // namespace mgmc::graph
