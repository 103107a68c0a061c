#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mgmc/matrix.hpp"
#include "mgmc/params.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/spectral_filter.hpp"

namespace mgmc::baselines {

struct ImputedMatrix {
  Matrix filled;
  Matrix imputed;  // 1 where the value was filled in
};

// Missing entries get the column mean of observed entries in `train_rows`.
// Columns with no such entry fall back to 0 with a warning.
ImputedMatrix mean_impute(const Matrix& x, const Matrix& observed,
                          std::span<const std::size_t> train_rows);

// Row distance: mean squared difference over mutually observed columns (no
// overlap = infinitely far). Missing (r, c) takes the mean of column c over the
// k nearest other rows observing c, ties by lower row index; falls back to the
// training-row mean when no row observes c. k > n - 1 is clamped.
ImputedMatrix knn_impute(const Matrix& x, const Matrix& observed, std::size_t k,
                         std::span<const std::size_t> train_rows);

struct SoftmaxRegressionConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 500;
  std::size_t patience = 50;  // on validation CE when validation rows are given; 0 = off
  double l2 = 0.0;
};

// Linear logits + softmax. Zero-initialized.
class SoftmaxRegression {
 public:
  SoftmaxRegression() = default;
  SoftmaxRegression(std::size_t features, std::size_t classes);

  Matrix logits(const Matrix& features) const;
  Matrix predict_proba(const Matrix& features) const;

  const Matrix& weights() const noexcept { return params_.value(w_); }
  const Matrix& bias() const noexcept { return params_.value(b_); }
  ParamStore& params() noexcept { return params_; }
  ParamId weight_id() const noexcept { return w_; }
  ParamId bias_id() const noexcept { return b_; }

 private:
  ParamStore params_;
  ParamId w_;
  ParamId b_;
};

// Cross-entropy training with Adam on `train_rows`; early stopping on
// `val_rows` when non-empty.
SoftmaxRegression fit_softmax_regression(const Matrix& features, std::span<const std::size_t> labels,
                                         std::size_t classes,
                                         std::span<const std::size_t> train_rows,
                                         std::span<const std::size_t> val_rows,
                                         const SoftmaxRegressionConfig& config);

struct GcnConfig {
  int cheb_order = 3;
  std::size_t hidden = 32;
  double learning_rate = 0.005;
  std::size_t epochs = 500;
  std::size_t patience = 30;
  bool bias = true;
  std::uint64_t seed = 0;
};

// Chebyshev layer with ReLU followed by a linear head to class logits, trained
// with masked cross-entropy only.
class GcnClassifier {
 public:
  static GcnClassifier create(std::size_t features, std::size_t classes, const GcnConfig& config);

  ad::Var forward(ad::Tape& tape, const BoundParams& params, const Matrix& features,
                  const Matrix& rescaled) const;
  Matrix logits(const Matrix& features, const Matrix& rescaled) const;
  Matrix predict_proba(const Matrix& features, const Matrix& rescaled) const;

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const spectral::ChebLayer& layer() const noexcept { return layer_; }
  ParamId head_weight() const noexcept { return head_w_; }
  ParamId head_bias() const noexcept { return head_b_; }

 private:
  ParamStore params_;
  spectral::ChebLayer layer_;
  ParamId head_w_;
  ParamId head_b_;
};

GcnClassifier fit_gcn_classifier(const Matrix& features, const graph::PopulationGraph& graph,
                                 std::span<const std::size_t> labels, std::size_t classes,
                                 std::span<const std::size_t> train_rows,
                                 std::span<const std::size_t> val_rows, const GcnConfig& config);

// Rows-by-class one-hot matrix.
Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes);

}  // namespace mgmc::baselines
