#include "mgmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <memory>
#include <string>

#include "mgmc/errors.hpp"
#include "mgmc/logging.hpp"

namespace mgmc::metrics {

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.empty()) throw ContractError("accuracy: empty input");
  if (predicted.size() != truth.size()) {
    throw ContractError("accuracy: " + std::to_string(predicted.size()) + " predictions vs " +
                        std::to_string(truth.size()) + " labels");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<std::size_t> argmax_rows(const Matrix& scores) {
  std::vector<std::size_t> out(scores.rows(), 0);
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    for (std::size_t c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, out[r])) out[r] = c;
    }
  }
  return out;
}

double roc_auc_binary(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw ContractError("roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are 1-based; a tie group spanning positions [i, j) gets (i + j + 1) / 2.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ContractError("roc_auc: need both positive and negative samples");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double roc_auc(const Matrix& scores, std::span<const std::size_t> truth) {
  if (scores.rows() != truth.size()) throw ContractError("roc_auc: score rows != label count");
  std::vector<std::size_t> counts(scores.cols(), 0);
  for (std::size_t t : truth) {
    if (t >= scores.cols()) throw ContractError("roc_auc: label out of range");
    ++counts[t];
  }
  double total = 0.0;
  std::size_t used = 0;
  std::vector<double> column(truth.size());
  // std::vector<bool> is bit-packed, so a plain array backs the span.
  std::unique_ptr<bool[]> membership(new bool[truth.size()]);
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    if (counts[c] == 0) {
      log::warn("roc_auc: class " + std::to_string(c) + " absent from truth; skipped");
      continue;
    }
    if (counts[c] == truth.size()) break;  // only one class present; handled below
    for (std::size_t r = 0; r < truth.size(); ++r) {
      column[r] = scores(r, c);
      membership[r] = truth[r] == c;
    }
    total += roc_auc_binary(column, std::span<const bool>(membership.get(), truth.size()));
    ++used;
  }
  if (used < 2) throw ContractError("roc_auc: fewer than two classes present in truth");
  return total / static_cast<double>(used);
}

std::optional<double> masked_rmse(const Matrix& estimate, const Matrix& truth, const Matrix& mask) {
  if (!estimate.same_shape(truth) || !estimate.same_shape(mask)) {
    throw DimensionError("masked_rmse: shapes " + estimate.shape_string() + ", " +
                         truth.shape_string() + ", " + mask.shape_string());
  }
  double ss = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        const double d = estimate(r, c) - truth(r, c);
        ss += d * d;
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return std::sqrt(ss / static_cast<double>(count));
}

}  // namespace mgmc::metrics
