#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mgmc/matrix.hpp"

namespace mgmc::metrics {

// Fraction of positions where prediction equals truth. Empty input or a
// length mismatch raises ContractError.
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

// Index of the largest entry per row, lowest index on ties.
std::vector<std::size_t> argmax_rows(const Matrix& scores);

// Mann-Whitney AUC with midranks for ties. Needs at least one positive and one
// negative, otherwise ContractError.
double roc_auc_binary(std::span<const double> scores, std::span<const bool> positive);

// Macro one-vs-rest AUC over the classes present in `truth`; absent classes are
// skipped with a warning. Fewer than two present classes raises ContractError.
double roc_auc(const Matrix& scores, std::span<const std::size_t> truth);

// sqrt(mean((estimate - truth)^2)) over entries where mask is 1; nullopt when
// the mask is empty.
std::optional<double> masked_rmse(const Matrix& estimate, const Matrix& truth, const Matrix& mask);

}  // namespace mgmc::metrics
