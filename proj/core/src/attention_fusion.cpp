#include "mgmc/attention_fusion.hpp"

#include <cmath>
#include <vector>

#include "mgmc/errors.hpp"

namespace mgmc::fusion {

const char* to_string(AttentionMode mode) noexcept {
  switch (mode) {
    case AttentionMode::Additive: return "additive";
    case AttentionMode::Global: return "global";
    case AttentionMode::QueryKey: return "query-key";
  }
  return "unknown";
}

AttentionMode attention_mode_from_string(const std::string& name) {
  if (name == "additive") return AttentionMode::Additive;
  if (name == "global") return AttentionMode::Global;
  if (name == "query-key") return AttentionMode::QueryKey;
  throw ConfigError("unknown attention mode '" + name + "'");
}

FusionHead make_fusion_head(ParamStore& store, std::size_t signal_dim, std::size_t attention_dim,
                            AttentionMode mode, Rng& rng, std::size_t score_dim) {
  if (signal_dim == 0 || attention_dim == 0) throw ContractError("fusion head dims must be positive");
  if (score_dim == 0) score_dim = signal_dim;
  if (score_dim > signal_dim) throw ContractError("fusion head: score_dim exceeds signal_dim");
  FusionHead head;
  head.mode = mode;
  head.signal_dim = signal_dim;
  head.score_dim = score_dim;
  head.attention_dim = attention_dim;
  const double s = std::sqrt(6.0 / static_cast<double>(score_dim + attention_dim));
  head.w_a = store.add("fusion.W_a", uniform_matrix(rng, score_dim, attention_dim, s));
  head.v = store.add("fusion.v",
                     uniform_matrix(rng, attention_dim, 1, std::sqrt(6.0 / (attention_dim + 1.0))));
  if (mode == AttentionMode::QueryKey) {
    head.w_k = store.add("fusion.W_k", uniform_matrix(rng, score_dim, attention_dim, s));
  }
  return head;
}

namespace {

ad::Var mix(std::span<const ad::Var> branches, ad::Var weights) {
  ad::Var out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    ad::Var term = ad::mul_col_broadcast(branches[i], ad::slice_cols(weights, i, i + 1));
    out = i == 0 ? term : ad::add(out, term);
  }
  return out;
}

ad::Var scored_part(const FusionHead& head, ad::Var zb) {
  return head.score_dim == head.signal_dim ? zb : ad::slice_cols(zb, 0, head.score_dim);
}

ad::Var additive_scores(const FusionHead& head, const BoundParams& params,
                        std::span<const ad::Var> branches) {
  std::vector<ad::Var> scores;
  for (const auto& zb : branches) {
    scores.push_back(
        ad::matmul(ad::tanh(ad::matmul(scored_part(head, zb), params[head.w_a])), params[head.v]));
  }
  return ad::concat_cols(scores);
}

}  // namespace

FusionResult fuse(const FusionHead& head, const BoundParams& params,
                  std::span<const ad::Var> branches, std::span<const ad::Var> score_inputs) {
  if (branches.empty()) throw ContractError("fuse: at least one branch output is required");
  const Matrix& first = branches.front().value();
  for (const auto& b : branches) {
    if (!b.value().same_shape(first)) {
      throw DimensionError("fuse: branch outputs differ in shape (" + first.shape_string() +
                           " vs " + b.value().shape_string() + ")");
    }
  }
  if (first.cols() != head.signal_dim) {
    throw DimensionError("fuse: branch width " + std::to_string(first.cols()) +
                         " != head width " + std::to_string(head.signal_dim));
  }
  if (!score_inputs.empty()) {
    if (score_inputs.size() != branches.size()) {
      throw ContractError("fuse: " + std::to_string(score_inputs.size()) + " score inputs for " +
                          std::to_string(branches.size()) + " branches");
    }
    for (const auto& s : score_inputs) {
      if (!s.value().same_shape(first)) throw DimensionError("fuse: score input shape differs from branches");
    }
  }
  const auto scored = score_inputs.empty() ? branches : score_inputs;
  ad::Tape& tape = *branches.front().tape();
  const std::size_t n = first.rows();
  const std::size_t count = branches.size();

  ad::Var weights;
  switch (head.mode) {
    case AttentionMode::Additive:
      weights = ad::rowwise_softmax(additive_scores(head, params, scored));
      break;
    case AttentionMode::Global: {
      ad::Var global = ad::rowwise_softmax(ad::col_mean(additive_scores(head, params, scored)));
      weights = ad::matmul(tape.constant(Matrix::ones(n, 1)), global);
      break;
    }
    case AttentionMode::QueryKey: {
      const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head.attention_dim));
      std::vector<ad::Var> queries, keys;
      for (const auto& zb : scored) {
        queries.push_back(ad::matmul(scored_part(head, zb), params[head.w_a]));
        keys.push_back(ad::matmul(scored_part(head, zb), params[head.w_k]));
      }
      ad::Var received;
      for (std::size_t i = 0; i < count; ++i) {
        std::vector<ad::Var> logits;
        for (std::size_t j = 0; j < count; ++j) {
          logits.push_back(ad::scale(ad::row_sum(ad::mul(queries[i], keys[j])), inv_sqrt));
        }
        ad::Var attn = ad::rowwise_softmax(ad::concat_cols(logits));
        received = i == 0 ? attn : ad::add(received, attn);
      }
      weights = ad::scale(received, 1.0 / static_cast<double>(count));
      break;
    }
  }
  return {mix(branches, weights), weights};
}

}  // namespace mgmc::fusion
