#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgmc/attention_fusion.hpp"
#include "mgmc/params.hpp"
#include "mgmc/population_graph.hpp"
#include "mgmc/recurrent_branch.hpp"
#include "mgmc/tape.hpp"

namespace mgmc {

struct ModelConfig {
  std::size_t features = 0;  // m
  std::size_t classes = 0;   // c
  std::size_t graphs = 1;    // I
  int cheb_order = 3;        // K
  std::size_t hidden = 32;
  std::size_t steps = 10;    // T
  bool autoregressive = false;
  bool cheb_bias = true;
  fusion::AttentionMode attention = fusion::AttentionMode::Additive;
  std::size_t attention_dim = 16;
  // When false (and I > 1), attention scores come from a second branch pass
  // over Z with its label block zeroed, restricted to the feature columns.
  // When true, scores read each branch output in full, label block included.
  bool attention_reads_labels = false;

  std::size_t signal_dim() const noexcept { return features + classes; }
  void validate() const;
};

// One recurrent graph branch per population graph plus a shared fusion head.
class MgmcModel {
 public:
  static MgmcModel create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const std::vector<recurrent::Branch>& branches() const noexcept { return branches_; }
  const fusion::FusionHead& head() const noexcept { return head_; }

  struct Forward {
    std::vector<ad::Var> branch_outputs;
    ad::Var fused;
    ad::Var attention;
  };
  // `rescaled` holds one rescaled Laplacian per branch.
  Forward forward(ad::Tape& tape, const BoundParams& params,
                  std::span<const Matrix* const> rescaled, ad::Var z,
                  recurrent::BranchTrace* trace = nullptr) const;

  struct Prediction {
    Matrix fused;                  // n x (m + c)
    Matrix attention;              // n x I
    Matrix class_probabilities;    // n x c, softmax of the label block
    std::vector<Matrix> branches;  // per-branch reconstructions
  };
  Prediction predict(const Matrix& z, std::span<const graph::PopulationGraph> graphs) const;

  // Binary container: "MGMC1", format version, config JSON, then every
  // parameter as (name, rows, cols, row-major doubles). Little-endian.
  std::string serialize() const;
  static MgmcModel deserialize(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static MgmcModel load(const std::filesystem::path& path);

 private:
  ModelConfig config_;
  ParamStore params_;
  std::vector<recurrent::Branch> branches_;
  fusion::FusionHead head_;
};

std::string to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace mgmc
