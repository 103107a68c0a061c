#include "mgmc/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgmc/errors.hpp"

namespace mgmc::ad {

namespace {

void require_same_shape(Var a, Var b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.value().shape_string() +
                         " vs " + b.value().shape_string());
  }
}

Tape& common_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid()) throw ContractError(std::string(op) + ": unbound variable");
  if (a.tape() != b.tape()) throw ContractError(std::string(op) + ": operands on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a, const char* op) {
  if (!a.valid()) throw ContractError(std::string(op) + ": unbound variable");
  return *a.tape();
}

Matrix scalar(double v) { return Matrix(1, 1, v); }

}  // namespace

const char* to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::AddRowBroadcast: return "add_row_broadcast";
    case OpKind::MulColBroadcast: return "mul_col_broadcast";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::FrobeniusSq: return "frobenius_sq";
    case OpKind::Trace: return "trace";
    case OpKind::RowSoftmax: return "rowwise_softmax";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::HadamardConst: return "hadamard_const";
    case OpKind::RowSum: return "row_sum";
    case OpKind::ColMean: return "col_mean";
    case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::Custom: return "custom";
  }
  return "unknown";
}

const Matrix& Var::value() const {
  if (!tape_) throw ContractError("Var::value on unbound variable");
  return tape_->value(id_);
}

OpKind Var::op() const {
  if (!tape_) throw ContractError("Var::op on unbound variable");
  return tape_->op(id_);
}

bool Var::requires_grad() const {
  if (!tape_) throw ContractError("Var::requires_grad on unbound variable");
  return tape_->requires_grad(id_);
}

Var Tape::parameter(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = OpKind::Leaf;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = OpKind::Constant;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(OpKind kind, Matrix value, std::vector<std::size_t> parents,
                 BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = kind;
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw ContractError("Tape::record: parent does not precede node");
    n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  }
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v, const char* op_name) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError(std::string(op_name) + ": variable does not belong to this tape");
  }
}

Matrix Tape::grad(Var v) const {
  check_owned(v, "Tape::grad");
  const Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) return Matrix::zeros(n.value.rows(), n.value.cols());
  return Matrix(n.grad);
}

std::vector<std::size_t> Tape::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == OpKind::Leaf) out.push_back(i);
  }
  return out;
}

void Tape::accumulate(std::size_t id, const DenseRowMajor& delta) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
}

void Tape::backward(Var loss) {
  check_owned(loss, "Tape::backward");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  zero_grad();
  nodes_[loss.id()].grad = DenseRowMajor::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    // Copy: backward may accumulate into this node only through parents, but
    // keep the upstream gradient immune to aliasing regardless.
    const DenseRowMajor g = n.grad;
    n.backward(*this, g);
  }
}

Var matmul(Var a, Var b) {
  Tape& t = common_tape(a, b, "matmul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: shape mismatch " + av.shape_string() + " * " +
                         bv.shape_string());
  }
  Matrix out(DenseRowMajor(av.dense() * bv.dense()));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::MatMul, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, const DenseRowMajor& g) {
                    if (tp.requires_grad(ia))
                      tp.accumulate(ia, g * tp.value(ib).dense().transpose());
                    if (tp.requires_grad(ib))
                      tp.accumulate(ib, tp.value(ia).dense().transpose() * g);
                  });
}

Var add(Var a, Var b) {
  Tape& t = common_tape(a, b, "add");
  require_same_shape(a, b, "add");
  Matrix out(DenseRowMajor(a.value().dense() + b.value().dense()));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::Add, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g);
                  });
}

Var sub(Var a, Var b) {
  Tape& t = common_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  Matrix out(DenseRowMajor(a.value().dense() - b.value().dense()));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::Sub, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, -g);
                  });
}

Var mul(Var a, Var b) {
  Tape& t = common_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  Matrix out(DenseRowMajor(a.value().dense().cwiseProduct(b.value().dense())));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(OpKind::Mul, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, const DenseRowMajor& g) {
                    if (tp.requires_grad(ia))
                      tp.accumulate(ia, g.cwiseProduct(tp.value(ib).dense()));
                    if (tp.requires_grad(ib))
                      tp.accumulate(ib, g.cwiseProduct(tp.value(ia).dense()));
                  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a, "scale");
  if (!std::isfinite(factor)) throw NumericError("scale: factor is not finite");
  Matrix out(DenseRowMajor(a.value().dense() * factor));
  const std::size_t ia = a.id();
  return t.record(OpKind::Scale, std::move(out), {ia},
                  [ia, factor](Tape& tp, const DenseRowMajor& g) { tp.accumulate(ia, g * factor); });
}

Matrix sigmoid(const Matrix& m) {
  DenseRowMajor out = m.dense().unaryExpr([](double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return Matrix(std::move(out));
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a, "sigmoid");
  Matrix out = sigmoid(a.value());
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(OpKind::Sigmoid, std::move(out), {ia},
                  [ia, io](Tape& tp, const DenseRowMajor& g) {
                    const DenseRowMajor& s = tp.value(io).dense();
                    tp.accumulate(ia, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
                  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a, "tanh");
  Matrix out(DenseRowMajor(a.value().dense().array().tanh().matrix()));
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(OpKind::Tanh, std::move(out), {ia},
                  [ia, io](Tape& tp, const DenseRowMajor& g) {
                    const DenseRowMajor& y = tp.value(io).dense();
                    tp.accumulate(ia, (g.array() * (1.0 - y.array().square())).matrix());
                  });
}

Var relu(Var a) {
  Tape& t = tape_of(a, "relu");
  Matrix out(DenseRowMajor(a.value().dense().cwiseMax(0.0)));
  const std::size_t ia = a.id();
  return t.record(OpKind::Relu, std::move(out), {ia},
                  [ia](Tape& tp, const DenseRowMajor& g) {
                    const DenseRowMajor& x = tp.value(ia).dense();
                    tp.accumulate(ia, (x.array() > 0.0).select(g, 0.0).matrix());
                  });
}

Var add_row_broadcast(Var a, Var row) {
  Tape& t = common_tape(a, row, "add_row_broadcast");
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("add_row_broadcast: row " + rv.shape_string() +
                         " does not broadcast over " + av.shape_string());
  }
  DenseRowMajor out = av.dense();
  out.rowwise() += rv.dense().row(0);
  const std::size_t ia = a.id(), ir = row.id();
  return t.record(OpKind::AddRowBroadcast, Matrix(std::move(out)), {ia, ir},
                  [ia, ir](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, g);
                    if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
                  });
}

Var mul_col_broadcast(Var a, Var col) {
  Tape& t = common_tape(a, col, "mul_col_broadcast");
  const Matrix& av = a.value();
  const Matrix& cv = col.value();
  if (cv.cols() != 1 || cv.rows() != av.rows()) {
    throw DimensionError("mul_col_broadcast: column " + cv.shape_string() +
                         " does not broadcast over " + av.shape_string());
  }
  DenseRowMajor out = cv.dense().col(0).asDiagonal() * av.dense();
  const std::size_t ia = a.id(), ic = col.id();
  return t.record(OpKind::MulColBroadcast, Matrix(std::move(out)), {ia, ic},
                  [ia, ic](Tape& tp, const DenseRowMajor& g) {
                    if (tp.requires_grad(ia))
                      tp.accumulate(ia, tp.value(ic).dense().col(0).asDiagonal() * g);
                    if (tp.requires_grad(ic))
                      tp.accumulate(ic, g.cwiseProduct(tp.value(ia).dense()).rowwise().sum());
                  });
}

Var sum(Var a) {
  Tape& t = tape_of(a, "sum");
  const std::size_t ia = a.id();
  const auto r = static_cast<Eigen::Index>(a.rows());
  const auto c = static_cast<Eigen::Index>(a.cols());
  return t.record(OpKind::Sum, scalar(a.value().dense().sum()), {ia},
                  [ia, r, c](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, DenseRowMajor::Constant(r, c, g(0, 0)));
                  });
}

Var mean(Var a) {
  Tape& t = tape_of(a, "mean");
  if (a.value().empty()) throw ContractError("mean of empty matrix");
  const std::size_t ia = a.id();
  const auto r = static_cast<Eigen::Index>(a.rows());
  const auto c = static_cast<Eigen::Index>(a.cols());
  const double inv = 1.0 / static_cast<double>(r * c);
  return t.record(OpKind::Mean, scalar(a.value().dense().sum() * inv), {ia},
                  [ia, r, c, inv](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, DenseRowMajor::Constant(r, c, g(0, 0) * inv));
                  });
}

Var frobenius_sq(Var a) {
  Tape& t = tape_of(a, "frobenius_sq");
  const std::size_t ia = a.id();
  return t.record(OpKind::FrobeniusSq, scalar(a.value().dense().squaredNorm()), {ia},
                  [ia](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, tp.value(ia).dense() * (2.0 * g(0, 0)));
                  });
}

Var trace(Var a) {
  Tape& t = tape_of(a, "trace");
  const Matrix& av = a.value();
  if (av.rows() != av.cols()) {
    throw DimensionError("trace: non-square input " + av.shape_string());
  }
  const std::size_t ia = a.id();
  const auto n = static_cast<Eigen::Index>(av.rows());
  return t.record(OpKind::Trace, scalar(av.dense().trace()), {ia},
                  [ia, n](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, DenseRowMajor::Identity(n, n) * g(0, 0));
                  });
}

Var row_sum(Var a) {
  Tape& t = tape_of(a, "row_sum");
  const std::size_t ia = a.id();
  const auto c = static_cast<Eigen::Index>(a.cols());
  DenseRowMajor out = a.value().dense().rowwise().sum();
  return t.record(OpKind::RowSum, Matrix(std::move(out)), {ia},
                  [ia, c](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, g.col(0).replicate(1, c));
                  });
}

Var col_mean(Var a) {
  Tape& t = tape_of(a, "col_mean");
  if (a.rows() == 0) throw ContractError("col_mean of empty matrix");
  const std::size_t ia = a.id();
  const auto r = static_cast<Eigen::Index>(a.rows());
  DenseRowMajor out = a.value().dense().colwise().mean();
  return t.record(OpKind::ColMean, Matrix(std::move(out)), {ia},
                  [ia, r](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, (g / static_cast<double>(r)).replicate(r, 1));
                  });
}

Matrix rowwise_softmax(const Matrix& m) {
  DenseRowMajor out = m.dense();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    row.array() -= row.maxCoeff();
    row = row.unaryExpr([](double v) { return std::exp(v); });
    row /= row.sum();
  }
  return Matrix(std::move(out));
}

Var rowwise_softmax(Var a) {
  Tape& t = tape_of(a, "rowwise_softmax");
  Matrix out = rowwise_softmax(a.value());
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(OpKind::RowSoftmax, std::move(out), {ia},
                  [ia, io](Tape& tp, const DenseRowMajor& g) {
                    const DenseRowMajor& s = tp.value(io).dense();
                    // dx = s * (g - <g, s>) per row
                    const Eigen::VectorXd dots = g.cwiseProduct(s).rowwise().sum();
                    DenseRowMajor dx = g;
                    dx.colwise() -= dots;
                    tp.accumulate(ia, dx.cwiseProduct(s));
                  });
}

Var concat_cols(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat_cols(std::span<const Var>(parts));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  Tape& t = tape_of(parts[0], "concat_cols");
  const std::size_t rows = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ContractError("concat_cols: operands on different tapes");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + parts[0].value().shape_string() +
                           " vs " + p.value().shape_string());
    }
    ids.push_back(p.id());
    widths.push_back(static_cast<Eigen::Index>(p.cols()));
    total += p.cols();
  }
  DenseRowMajor out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(total));
  Eigen::Index offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out.middleCols(offset, widths[k]) = parts[k].value().dense();
    offset += widths[k];
  }
  return t.record(OpKind::ConcatCols, Matrix(std::move(out)), ids,
                  [ids, widths](Tape& tp, const DenseRowMajor& g) {
                    Eigen::Index off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (tp.requires_grad(ids[k]))
                        tp.accumulate(ids[k], g.middleCols(off, widths[k]));
                      off += widths[k];
                    }
                  });
}

Var slice_cols(Var a, std::size_t from, std::size_t to) {
  Tape& t = tape_of(a, "slice_cols");
  if (from >= to || to > a.cols()) {
    throw BoundsError("slice_cols: range [" + std::to_string(from) + "," + std::to_string(to) +
                      ") outside " + std::to_string(a.cols()) + " columns");
  }
  const auto f = static_cast<Eigen::Index>(from);
  const auto w = static_cast<Eigen::Index>(to - from);
  const auto r = static_cast<Eigen::Index>(a.rows());
  const auto c = static_cast<Eigen::Index>(a.cols());
  DenseRowMajor out = a.value().dense().middleCols(f, w);
  const std::size_t ia = a.id();
  return t.record(OpKind::SliceCols, Matrix(std::move(out)), {ia},
                  [ia, f, w, r, c](Tape& tp, const DenseRowMajor& g) {
                    DenseRowMajor full = DenseRowMajor::Zero(r, c);
                    full.middleCols(f, w) = g;
                    tp.accumulate(ia, full);
                  });
}

Var hadamard_const(Var a, const Matrix& mask) {
  Tape& t = tape_of(a, "hadamard_const");
  if (!a.value().same_shape(mask)) {
    throw DimensionError("hadamard_const: mask " + mask.shape_string() + " vs operand " +
                         a.value().shape_string());
  }
  Matrix out(DenseRowMajor(a.value().dense().cwiseProduct(mask.dense())));
  const std::size_t ia = a.id();
  return t.record(OpKind::HadamardConst, std::move(out), {ia},
                  [ia, mask](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(ia, g.cwiseProduct(mask.dense()));
                  });
}

Var softmax_cross_entropy(Var logits, const Matrix& targets,
                          std::span<const std::size_t> rows) {
  Tape& t = tape_of(logits, "softmax_cross_entropy");
  const Matrix& lv = logits.value();
  if (!lv.same_shape(targets)) {
    throw DimensionError("softmax_cross_entropy: logits " + lv.shape_string() + " vs targets " +
                         targets.shape_string());
  }
  if (rows.empty()) throw ContractError("softmax_cross_entropy: no selected rows");
  const auto c = static_cast<Eigen::Index>(lv.cols());
  const double inv = 1.0 / static_cast<double>(rows.size());
  // Per selected row: (softmax - target) cached for backward.
  DenseRowMajor residual = DenseRowMajor::Zero(lv.dense().rows(), c);
  double loss = 0.0;
  for (std::size_t r : rows) {
    if (r >= lv.rows()) throw BoundsError("softmax_cross_entropy: row index out of range");
    const auto ri = static_cast<Eigen::Index>(r);
    const auto z = lv.dense().row(ri);
    const double mx = z.maxCoeff();
    const Eigen::RowVectorXd shifted = z.array() - mx;
    const double lse = std::log(shifted.unaryExpr([](double v) { return std::exp(v); }).sum());
    const Eigen::RowVectorXd log_p = shifted.array() - lse;
    const auto y = targets.dense().row(ri);
    loss -= y.dot(log_p);
    residual.row(ri) += log_p.unaryExpr([](double v) { return std::exp(v); }) * y.sum() - y;
  }
  const std::size_t il = logits.id();
  return t.record(OpKind::SoftmaxCrossEntropy, scalar(loss * inv), {il},
                  [il, residual = std::move(residual), inv](Tape& tp, const DenseRowMajor& g) {
                    tp.accumulate(il, residual * (g(0, 0) * inv));
                  });
}

Var custom_unary(Var a, Matrix value, VjpFn vjp) {
  Tape& t = tape_of(a, "custom_unary");
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(OpKind::Custom, std::move(value), {ia},
                  [ia, io, vjp = std::move(vjp)](Tape& tp, const DenseRowMajor& g) {
                    Matrix dx = vjp(Matrix(g), tp.value(ia), tp.value(io));
                    if (!dx.same_shape(tp.value(ia)))
                      throw DimensionError("custom_unary: vjp returned wrong shape");
                    tp.accumulate(ia, dx.dense());
                  });
}

}  // namespace mgmc::ad
