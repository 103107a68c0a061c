#include "mgmc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mgmc/adam.hpp"
#include "mgmc/errors.hpp"
#include "mgmc/logging.hpp"

namespace mgmc::baselines {

namespace {

void check_inputs(const Matrix& x, const Matrix& observed) {
  if (!x.same_shape(observed)) {
    throw DimensionError("imputation: values " + x.shape_string() + " vs mask " +
                         observed.shape_string());
  }
}

std::vector<double> train_means(const Matrix& x, const Matrix& observed,
                                std::span<const std::size_t> train_rows) {
  std::vector<double> means(x.cols(), 0.0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r : train_rows) {
      if (observed(r, c) != 0.0) {
        sum += x(r, c);
        ++count;
      }
    }
    if (count == 0) {
      log::warn("mean_impute: column " + std::to_string(c) + " has no observed training entries; filling 0");
    } else {
      means[c] = sum / static_cast<double>(count);
    }
  }
  return means;
}

void check_classes(std::span<const std::size_t> labels, std::size_t classes,
                   std::span<const std::size_t> train_rows) {
  if (train_rows.empty()) throw DataError("classifier: no training rows");
  std::vector<bool> seen(classes, false);
  std::size_t distinct = 0;
  for (std::size_t r : train_rows) {
    if (labels[r] >= classes) throw DataError("classifier: label out of range");
    if (!seen[labels[r]]) {
      seen[labels[r]] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw DataError("classifier: training set contains a single class");
}

// Shared Adam loop with early stopping on validation CE.
template <typename LossFn, typename ValFn>
void fit_loop(ParamStore& params, double lr, std::size_t epochs, std::size_t patience,
              bool has_val, LossFn&& loss_fn, ValFn&& val_fn) {
  training::Adam adam;
  std::vector<Matrix> best(params.values().begin(), params.values().end());
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    ad::Tape tape;
    const BoundParams bound = bind(tape, params);
    auto [loss, logits] = loss_fn(tape, bound);
    if (has_val) {
      const double v = val_fn(logits.value());
      if (v < best_val) {
        best_val = v;
        since = 0;
        std::copy(params.values().begin(), params.values().end(), best.begin());
      } else if (patience > 0 && ++since >= patience) {
        break;
      }
    }
    tape.backward(loss);
    adam.step(params.values(), gradients(tape, bound), lr, epoch);
  }
  if (has_val) std::copy(best.begin(), best.end(), params.values().begin());
}

}  // namespace

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix y(labels.size(), classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= classes) throw DataError("one_hot: label out of range");
    y(r, labels[r]) = 1.0;
  }
  return y;
}

ImputedMatrix mean_impute(const Matrix& x, const Matrix& observed,
                          std::span<const std::size_t> train_rows) {
  check_inputs(x, observed);
  const auto means = train_means(x, observed, train_rows);
  ImputedMatrix out{x, Matrix::zeros(x.rows(), x.cols())};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (observed(r, c) == 0.0) {
        out.filled(r, c) = means[c];
        out.imputed(r, c) = 1.0;
      }
    }
  }
  return out;
}

ImputedMatrix knn_impute(const Matrix& x, const Matrix& observed, std::size_t k,
                         std::span<const std::size_t> train_rows) {
  check_inputs(x, observed);
  if (k == 0) throw ConfigError("knn_impute: k must be >= 1");
  const std::size_t n = x.rows(), m = x.cols();
  if (n >= 1 && k > n - 1) {
    log::warn("knn_impute: k=" + std::to_string(k) + " exceeds n-1; clamped to " + std::to_string(n - 1));
    k = n - 1;
  }
  const auto means = train_means(x, observed, train_rows);
  ImputedMatrix out{x, Matrix::zeros(n, m)};
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n);
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < n; ++r) {
    bool any_missing = false;
    for (std::size_t c = 0; c < m && !any_missing; ++c) any_missing = observed(r, c) == 0.0;
    if (!any_missing) continue;
    for (std::size_t o = 0; o < n; ++o) {
      if (o == r) {
        dist[o] = inf;
        continue;
      }
      double ss = 0.0;
      std::size_t overlap = 0;
      for (std::size_t c = 0; c < m; ++c) {
        if (observed(r, c) != 0.0 && observed(o, c) != 0.0) {
          const double d = x(r, c) - x(o, c);
          ss += d * d;
          ++overlap;
        }
      }
      dist[o] = overlap ? ss / static_cast<double>(overlap) : inf;
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    for (std::size_t c = 0; c < m; ++c) {
      if (observed(r, c) != 0.0) continue;
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t o : order) {
        if (used == k) break;
        if (o == r || dist[o] == inf) continue;
        if (observed(o, c) == 0.0) continue;
        sum += x(o, c);
        ++used;
      }
      out.filled(r, c) = used ? sum / static_cast<double>(used) : means[c];
      out.imputed(r, c) = 1.0;
    }
  }
  return out;
}

SoftmaxRegression::SoftmaxRegression(std::size_t features, std::size_t classes) {
  w_ = params_.add("lr.W", Matrix::zeros(features, classes));
  b_ = params_.add("lr.b", Matrix::zeros(1, classes));
}

Matrix SoftmaxRegression::logits(const Matrix& features) const {
  DenseRowMajor z = features.dense() * weights().dense();
  z.rowwise() += bias().dense().row(0);
  return Matrix(std::move(z));
}

Matrix SoftmaxRegression::predict_proba(const Matrix& features) const {
  return ad::rowwise_softmax(logits(features));
}

SoftmaxRegression fit_softmax_regression(const Matrix& features, std::span<const std::size_t> labels,
                                         std::size_t classes,
                                         std::span<const std::size_t> train_rows,
                                         std::span<const std::size_t> val_rows,
                                         const SoftmaxRegressionConfig& config) {
  if (labels.size() != features.rows()) throw DimensionError("softmax_regression: label count != rows");
  require_finite(features, "softmax_regression features");
  check_classes(labels, classes, train_rows);
  SoftmaxRegression model(features.cols(), classes);
  const Matrix targets = one_hot(labels, classes);
  const std::vector<std::size_t> tr(train_rows.begin(), train_rows.end());
  const std::vector<std::size_t> va(val_rows.begin(), val_rows.end());
  auto forward = [&](ad::Tape& tape, const BoundParams& p) {
    ad::Var logits = ad::add_row_broadcast(ad::matmul(tape.constant(features), p[model.weight_id()]),
                                           p[model.bias_id()]);
    ad::Var loss = ad::softmax_cross_entropy(logits, targets, tr);
    if (config.l2 > 0.0) loss = ad::add(loss, ad::scale(ad::frobenius_sq(p[model.weight_id()]), config.l2));
    return std::pair{loss, logits};
  };
  auto val = [&](const Matrix& logits) {
    ad::Tape t;
    return ad::softmax_cross_entropy(t.constant(logits), targets, va).value()(0, 0);
  };
  fit_loop(model.params(), config.learning_rate, config.epochs, config.patience, !va.empty(),
           forward, val);
  return model;
}

GcnClassifier GcnClassifier::create(std::size_t features, std::size_t classes, const GcnConfig& config) {
  GcnClassifier g;
  Rng rng(config.seed);
  g.layer_ = spectral::make_cheb_layer(g.params_, "gcn", config.cheb_order, features, config.hidden,
                                       config.bias, rng);
  const double s = std::sqrt(6.0 / static_cast<double>(config.hidden + classes));
  g.head_w_ = g.params_.add("gcn.head.W", uniform_matrix(rng, config.hidden, classes, s));
  g.head_b_ = g.params_.add("gcn.head.b", Matrix::zeros(1, classes));
  return g;
}

ad::Var GcnClassifier::forward(ad::Tape& tape, const BoundParams& params, const Matrix& features,
                               const Matrix& rescaled) const {
  ad::Var h = spectral::cheb_forward(layer_, params, tape.constant(rescaled), tape.constant(features));
  return ad::add_row_broadcast(ad::matmul(h, params[head_w_]), params[head_b_]);
}

Matrix GcnClassifier::logits(const Matrix& features, const Matrix& rescaled) const {
  ad::Tape tape;
  return forward(tape, bind(tape, params_), features, rescaled).value();
}

Matrix GcnClassifier::predict_proba(const Matrix& features, const Matrix& rescaled) const {
  return ad::rowwise_softmax(logits(features, rescaled));
}

GcnClassifier fit_gcn_classifier(const Matrix& features, const graph::PopulationGraph& graph,
                                 std::span<const std::size_t> labels, std::size_t classes,
                                 std::span<const std::size_t> train_rows,
                                 std::span<const std::size_t> val_rows, const GcnConfig& config) {
  if (labels.size() != features.rows() || graph.n != features.rows()) {
    throw DimensionError("gcn_classifier: features, labels and graph disagree on row count");
  }
  require_finite(features, "gcn_classifier features");
  check_classes(labels, classes, train_rows);
  GcnClassifier model = GcnClassifier::create(features.cols(), classes, config);
  const Matrix targets = one_hot(labels, classes);
  const std::vector<std::size_t> tr(train_rows.begin(), train_rows.end());
  const std::vector<std::size_t> va(val_rows.begin(), val_rows.end());
  auto forward = [&](ad::Tape& tape, const BoundParams& p) {
    ad::Var logits = model.forward(tape, p, features, graph.rescaled);
    return std::pair{ad::softmax_cross_entropy(logits, targets, tr), logits};
  };
  auto val = [&](const Matrix& logits) {
    ad::Tape t;
    return ad::softmax_cross_entropy(t.constant(logits), targets, va).value()(0, 0);
  };
  fit_loop(model.params(), config.learning_rate, config.epochs, config.patience, !va.empty(),
           forward, val);
  return model;
}

}  // namespace mgmc::baselines
