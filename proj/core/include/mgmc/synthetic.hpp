#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "mgmc/dataset.hpp"

namespace mgmc::data {

// Clustered low-rank data with noisy meta-features.
//
// Each row belongs to one of `classes` clusters (balanced, shuffled). Rows are
// X = U V^T + noise * eps with one shared loading matrix V (features x rank,
// standard normal) and latent rows u = mu_k + xi, xi standard normal. The
// cluster offsets mu_k sit evenly on a circle of radius `separation` in the
// first two latent dimensions (on a line when rank = 1). Every meta-feature
// equals the cluster id with probability `meta_fidelity`, otherwise a
// uniformly drawn other id.
struct SyntheticSpec {
  std::size_t rows = 300;
  std::size_t features = 40;
  std::size_t classes = 3;
  std::size_t rank = 2;
  double noise = 0.3;
  std::size_t meta_features = 3;
  double meta_fidelity = 0.9;
  double separation = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fully observed at baseline; ground_truth holds the complete raw matrix.
MaskedDataset generate_synthetic(const SyntheticSpec& spec);

// Dataset CSV + schema JSON + ground-truth CSV.
void write_synthetic(const MaskedDataset& dataset, const std::filesystem::path& out_dir);

}  // namespace mgmc::data
