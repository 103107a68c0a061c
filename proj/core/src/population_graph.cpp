#include "mgmc/population_graph.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include <json.hpp>

#include "mgmc/errors.hpp"
#include "mgmc/logging.hpp"

namespace mgmc::graph {

std::size_t PopulationGraph::edge_count() const {
  std::size_t edges = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (adjacency(i, j) != 0.0) ++edges;
  return edges;
}

std::size_t PopulationGraph::isolated_count() const {
  std::size_t k = 0;
  for (double d : degree)
    if (d == 0.0) ++k;
  return k;
}

Matrix similarity_adjacency(const MetaFeature& meta) {
  const std::size_t n = meta.values.size();
  if (n < 2) throw ContractError("build_graph: meta feature '" + meta.name + "' has fewer than 2 rows");
  if (!(meta.threshold >= 0.0)) {
    throw ConfigError("build_graph: threshold for '" + meta.name + "' must be non-negative");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!meta.values[i].has_value()) {
      throw DataError("meta feature '" + meta.name + "' is missing at row " + std::to_string(i));
    }
  }
  const double theta = meta.categorical ? 0.0 : meta.threshold;
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = *meta.values[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(vi - *meta.values[j]) <= theta) {
        w(i, j) = 1.0;
        w(j, i) = 1.0;
      }
    }
  }
  return w;
}

Matrix normalized_laplacian(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n) {
    throw DimensionError("normalized_laplacian: adjacency must be square, got " +
                         adjacency.shape_string());
  }
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) {
      throw ContractError("normalized_laplacian: non-zero diagonal at " + std::to_string(i));
    }
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = adjacency(i, j);
      if (w < 0.0) throw ContractError("normalized_laplacian: negative weight");
      if (w != adjacency(j, i)) {
        throw ContractError("normalized_laplacian: adjacency is not symmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
      }
      d += w;
    }
    if (d > 0.0) inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (inv_sqrt[i] > 0.0) l(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && adjacency(i, j) != 0.0) l(i, j) = -adjacency(i, j) * inv_sqrt[i] * inv_sqrt[j];
    }
  }
  return l;
}

std::pair<double, std::size_t> largest_eigenvalue(const Matrix& sym,
                                                  const PowerIterationOptions& opts) {
  const auto n = static_cast<Eigen::Index>(sym.rows());
  if (sym.cols() != sym.rows()) throw DimensionError("largest_eigenvalue: matrix must be square");
  if (n == 0) return {0.0, 0};
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = unif(rng) * ((i % 2 == 0) ? 1.0 : -1.0);
  v.normalize();
  const auto& a = sym.dense();
  double lambda = 0.0;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const Eigen::VectorXd av = a * v;
    lambda = v.dot(av);
    const double residual = (av - lambda * v).norm();
    if (residual <= opts.tolerance * std::max(1.0, std::abs(lambda))) return {lambda, it};
    const double norm = av.norm();
    if (norm < 1e-300) return {0.0, it};  // v in the null space: matrix is zero here
    v = av / norm;
  }
  throw NumericError("power iteration did not converge after " +
                     std::to_string(opts.max_iterations) + " iterations");
}

RescaledLaplacian rescale_laplacian(const Matrix& laplacian, const PowerIterationOptions& opts) {
  const std::size_t n = laplacian.rows();
  RescaledLaplacian out;
  if (laplacian.max_abs() == 0.0) {
    out.rescaled = Matrix(DenseRowMajor(-DenseRowMajor::Identity(n, n)));
    return out;
  }
  double lambda = 0.0;
  try {
    std::tie(lambda, out.iterations) = largest_eigenvalue(laplacian, opts);
  } catch (const NumericError&) {
    // Graphs built from a few categorical values have near-degenerate top
    // eigenvalues that power iteration cannot separate in the budget.
    log::debug("power iteration stalled; using the dense symmetric eigensolver");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(laplacian.dense()),
                                                          Eigen::EigenvaluesOnly);
    lambda = solver.eigenvalues().maxCoeff();
    out.iterations = opts.max_iterations;
  }
  out.lambda_max = lambda;
  if (lambda < 1e-12) {
    out.rescaled = Matrix(DenseRowMajor(-DenseRowMajor::Identity(n, n)));
    return out;
  }
  DenseRowMajor r = laplacian.dense() * (2.0 / lambda);
  r.diagonal().array() -= 1.0;
  out.rescaled = Matrix(std::move(r));
  return out;
}

PopulationGraph graph_from_adjacency(Matrix adjacency, std::string name) {
  PopulationGraph g;
  g.name = std::move(name);
  g.n = adjacency.rows();
  g.laplacian = normalized_laplacian(adjacency);
  g.degree.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) g.degree[i] += adjacency(i, j);
  g.adjacency = std::move(adjacency);
  auto rescaled = rescale_laplacian(g.laplacian);
  g.rescaled = std::move(rescaled.rescaled);
  g.lambda_max = rescaled.lambda_max;
  if (g.edge_count() == 0) {
    log::warn("graph '" + g.name + "' has no edges and contributes nothing");
  }
  return g;
}

PopulationGraph build_graph(const MetaFeature& meta) {
  return graph_from_adjacency(similarity_adjacency(meta), meta.name);
}

PopulationGraph combine_graphs(std::span<const PopulationGraph> graphs, std::string name) {
  if (graphs.empty()) throw ContractError("combine_graphs: no graphs");
  DenseRowMajor w = graphs.front().adjacency.dense();
  for (std::size_t i = 1; i < graphs.size(); ++i) {
    if (!graphs[i].adjacency.same_shape(graphs.front().adjacency)) {
      throw DimensionError("combine_graphs: graphs differ in node count");
    }
    w += graphs[i].adjacency.dense();
  }
  return graph_from_adjacency(Matrix(std::move(w)), std::move(name));
}

std::string edge_list(const PopulationGraph& graph) {
  std::ostringstream os;
  for (std::size_t i = 0; i < graph.n; ++i)
    for (std::size_t j = i + 1; j < graph.n; ++j)
      if (graph.adjacency(i, j) != 0.0) os << i << ' ' << j << '\n';
  return os.str();
}

std::string summary_json(const PopulationGraph& graph) {
  std::map<long long, std::size_t> hist;
  for (double d : graph.degree) ++hist[std::llround(d)];
  nlohmann::ordered_json j;
  j["name"] = graph.name;
  j["n"] = graph.n;
  j["edges"] = graph.edge_count();
  j["isolated"] = graph.isolated_count();
  j["lambda_max"] = graph.lambda_max;
  nlohmann::ordered_json h = nlohmann::ordered_json::object();
  for (const auto& [deg, count] : hist) h[std::to_string(deg)] = count;
  j["degree_histogram"] = h;
  return j.dump(2);
}

void export_graph(const PopulationGraph& graph, const std::filesystem::path& edge_list_path,
                  const std::filesystem::path& summary_path) {
  for (const auto& p : {edge_list_path, summary_path}) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream edges(edge_list_path);
  std::ofstream summary(summary_path);
  if (!edges || !summary) throw IoError("export_graph: cannot open output files");
  edges << edge_list(graph);
  summary << summary_json(graph) << '\n';
}

}  // namespace mgmc::graph
