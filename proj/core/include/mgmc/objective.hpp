#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mgmc/matrix.hpp"
#include "mgmc/tape.hpp"

namespace mgmc::objective {

struct LossWeights {
  double dirichlet = 1.0;       // gamma_a
  double reconstruction = 1.0;  // gamma_b
  double classification = 1.0;  // gamma_c

  // Non-negative, at least one strictly positive.
  void validate() const;
};

// Observation masks over the n x (m + c) assembled matrix.
struct MaskPair {
  Matrix features;  // 1 on observed feature entries, label columns zero
  Matrix labels;    // 1 on the label block of labeled training rows

  // 0/1 entries, equal shapes, disjoint supports.
  void validate() const;
};

// Rows and label-column block selected by a label mask. Every selected row
// must cover the whole block; throws ContractError otherwise.
struct LabelSelection {
  std::vector<std::size_t> rows;
  std::size_t first_col = 0;
  std::size_t width = 0;
};
LabelSelection label_selection(const Matrix& label_mask);

// tr(Zbar^T L Zbar).
ad::Var dirichlet(ad::Var zbar, const Matrix& laplacian);

// sum((mask o (Zbar - Z))^2); mask entries must be 0/1.
ad::Var masked_frobenius(ad::Var zbar, const Matrix& z, const Matrix& mask);

// Mean over labeled rows of the softmax cross-entropy of the label-column
// slice of Zhat against the one-hot label block of Z.
ad::Var masked_cross_entropy(ad::Var zhat, const Matrix& z, const Matrix& label_mask);

struct LossTerms {
  ad::Var total;
  double dirichlet = 0.0;      // unweighted sum over branches
  double reconstruction = 0.0; // unweighted sum over branches
  double cross_entropy = 0.0;
};

// sum_i [ g_a/2 dirichlet(Zbar_i, L_i) + g_b/2 masked_frobenius(Zbar_i) ] + g_c CE(Zhat).
// A zero weight leaves its term out of the total, so it contributes no gradient.
LossTerms mgmc_loss(std::span<const ad::Var> branch_outputs, ad::Var fused, const Matrix& z,
                    const MaskPair& masks, std::span<const Matrix* const> laplacians,
                    const LossWeights& weights);

}  // namespace mgmc::objective
