#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "mgmc/params.hpp"
#include "mgmc/tape.hpp"

namespace mgmc::fusion {

enum class AttentionMode {
  // Per-row score s_{r,i} = tanh(Zbar_i[r] W_a) v, softmax over branches.
  Additive,
  // Additive scores averaged over rows: one weight per branch for all rows.
  Global,
  // Scaled dot-product between branch tokens of a row; the branch weight is the
  // attention each branch receives, averaged over querying branches.
  QueryKey,
};

const char* to_string(AttentionMode mode) noexcept;
AttentionMode attention_mode_from_string(const std::string& name);

struct FusionHead {
  AttentionMode mode = AttentionMode::Additive;
  std::size_t signal_dim = 0;
  // Scores read only the leading score_dim columns of each branch output.
  // Restricting this to the feature block keeps the label columns of training
  // rows, which carry their given labels, from choosing the branch weights.
  std::size_t score_dim = 0;
  std::size_t attention_dim = 16;
  ParamId w_a;  // score_dim x attention_dim (query weights in QueryKey mode)
  ParamId v;    // attention_dim x 1 (unused in QueryKey mode)
  ParamId w_k;  // score_dim x attention_dim, QueryKey mode only
};

// score_dim = 0 means all signal_dim columns.
FusionHead make_fusion_head(ParamStore& store, std::size_t signal_dim, std::size_t attention_dim,
                            AttentionMode mode, Rng& rng, std::size_t score_dim = 0);

struct FusionResult {
  ad::Var fused;    // n x (m + c)
  ad::Var weights;  // n x I, rows sum to one
};

// Scores come from `score_inputs` when given (one per branch, same shapes as
// the branches); the weights always mix `branches`.
FusionResult fuse(const FusionHead& head, const BoundParams& params,
                  std::span<const ad::Var> branches, std::span<const ad::Var> score_inputs = {});

}  // namespace mgmc::fusion
