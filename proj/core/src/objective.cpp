#include "mgmc/objective.hpp"

#include "mgmc/errors.hpp"

namespace mgmc::objective {

namespace {

void require_binary(const Matrix& mask, const char* what) {
  for (double v : mask.data()) {
    if (v != 0.0 && v != 1.0) throw ContractError(std::string(what) + ": mask entries must be 0 or 1");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!(dirichlet >= 0.0) || !(reconstruction >= 0.0) || !(classification >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (dirichlet == 0.0 && reconstruction == 0.0 && classification == 0.0) {
    throw ConfigError("at least one loss weight must be positive");
  }
}

void MaskPair::validate() const {
  if (!features.same_shape(labels)) {
    throw DimensionError("MaskPair: feature mask " + features.shape_string() + " vs label mask " +
                         labels.shape_string());
  }
  require_binary(features, "MaskPair features");
  require_binary(labels, "MaskPair labels");
  const auto f = features.data();
  const auto l = labels.data();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] != 0.0 && l[i] != 0.0) throw ContractError("MaskPair: supports overlap");
  }
}

LabelSelection label_selection(const Matrix& label_mask) {
  require_binary(label_mask, "label mask");
  LabelSelection sel;
  std::size_t lo = label_mask.cols(), hi = 0;
  for (std::size_t r = 0; r < label_mask.rows(); ++r) {
    for (std::size_t c = 0; c < label_mask.cols(); ++c) {
      if (label_mask(r, c) != 0.0) {
        lo = std::min(lo, c);
        hi = std::max(hi, c + 1);
      }
    }
  }
  if (hi == 0) return sel;
  sel.first_col = lo;
  sel.width = hi - lo;
  for (std::size_t r = 0; r < label_mask.rows(); ++r) {
    std::size_t ones = 0;
    for (std::size_t c = lo; c < hi; ++c) ones += label_mask(r, c) != 0.0 ? 1 : 0;
    if (ones == 0) continue;
    if (ones != sel.width) {
      throw ContractError("label mask row " + std::to_string(r) +
                          " covers only part of the label block");
    }
    sel.rows.push_back(r);
  }
  return sel;
}

ad::Var dirichlet(ad::Var zbar, const Matrix& laplacian) {
  if (laplacian.rows() != laplacian.cols()) {
    throw DimensionError("dirichlet: Laplacian must be square, got " + laplacian.shape_string());
  }
  if (laplacian.cols() != zbar.rows()) {
    throw DimensionError("dirichlet: Laplacian " + laplacian.shape_string() +
                         " incompatible with signal " + zbar.value().shape_string());
  }
  ad::Tape& tape = *zbar.tape();
  ad::Var lz = ad::matmul(tape.constant(laplacian), zbar);
  return ad::sum(ad::mul(zbar, lz));
}

ad::Var masked_frobenius(ad::Var zbar, const Matrix& z, const Matrix& mask) {
  if (!zbar.value().same_shape(z) || !z.same_shape(mask)) {
    throw DimensionError("masked_frobenius: shapes " + zbar.value().shape_string() + ", " +
                         z.shape_string() + ", " + mask.shape_string() + " must agree");
  }
  require_binary(mask, "masked_frobenius");
  ad::Tape& tape = *zbar.tape();
  return ad::frobenius_sq(ad::hadamard_const(ad::sub(zbar, tape.constant(z)), mask));
}

ad::Var masked_cross_entropy(ad::Var zhat, const Matrix& z, const Matrix& label_mask) {
  if (!zhat.value().same_shape(z) || !z.same_shape(label_mask)) {
    throw DimensionError("masked_cross_entropy: shapes " + zhat.value().shape_string() + ", " +
                         z.shape_string() + ", " + label_mask.shape_string() + " must agree");
  }
  const LabelSelection sel = label_selection(label_mask);
  if (sel.rows.empty()) throw ContractError("masked_cross_entropy: no labeled rows");
  const auto f = static_cast<Eigen::Index>(sel.first_col);
  const auto w = static_cast<Eigen::Index>(sel.width);
  Matrix targets(DenseRowMajor(z.dense().middleCols(f, w)));
  ad::Var logits = ad::slice_cols(zhat, sel.first_col, sel.first_col + sel.width);
  return ad::softmax_cross_entropy(logits, targets, sel.rows);
}

LossTerms mgmc_loss(std::span<const ad::Var> branch_outputs, ad::Var fused, const Matrix& z,
                    const MaskPair& masks, std::span<const Matrix* const> laplacians,
                    const LossWeights& weights) {
  weights.validate();
  masks.validate();
  if (branch_outputs.size() != laplacians.size()) {
    throw ContractError("mgmc_loss: " + std::to_string(branch_outputs.size()) +
                        " branch outputs but " + std::to_string(laplacians.size()) +
                        " Laplacians");
  }
  if (branch_outputs.empty()) throw ContractError("mgmc_loss: no branches");
  LossTerms terms;
  std::vector<ad::Var> parts;
  for (std::size_t i = 0; i < branch_outputs.size(); ++i) {
    ad::Var d = dirichlet(branch_outputs[i], *laplacians[i]);
    ad::Var r = masked_frobenius(branch_outputs[i], z, masks.features);
    terms.dirichlet += d.value()(0, 0);
    terms.reconstruction += r.value()(0, 0);
    if (weights.dirichlet > 0.0) parts.push_back(ad::scale(d, weights.dirichlet / 2.0));
    if (weights.reconstruction > 0.0) parts.push_back(ad::scale(r, weights.reconstruction / 2.0));
  }
  if (weights.classification > 0.0) {
    ad::Var ce = masked_cross_entropy(fused, z, masks.labels);
    terms.cross_entropy = ce.value()(0, 0);
    parts.push_back(ad::scale(ce, weights.classification));
  } else if (!label_selection(masks.labels).rows.empty()) {
    terms.cross_entropy = masked_cross_entropy(fused, z, masks.labels).value()(0, 0);
  }
  ad::Var total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total = ad::add(total, parts[i]);
  terms.total = total;
  return terms;
}

}  // namespace mgmc::objective
