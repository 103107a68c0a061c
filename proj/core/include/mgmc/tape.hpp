#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "mgmc/matrix.hpp"

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation in creation order, so a node's parents always
// precede it and the backward sweep is a single reverse pass. Tapes are
// single-threaded; independent tapes may live on different threads.
namespace mgmc::ad {

class Tape;

enum class OpKind : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Sigmoid,
  Tanh,
  Relu,
  AddRowBroadcast,
  MulColBroadcast,
  Sum,
  Mean,
  FrobeniusSq,
  Trace,
  RowSoftmax,
  ConcatCols,
  SliceCols,
  HadamardConst,
  RowSum,
  ColMean,
  SoftmaxCrossEntropy,
  Custom,
};

const char* to_string(OpKind kind) noexcept;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  OpKind op() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the upstream gradient of the node and the tape; accumulates into
  // parents through Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const DenseRowMajor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Trainable leaf.
  Var parameter(Matrix value);
  // Non-differentiable input.
  Var constant(Matrix value);

  Var record(OpKind kind, Matrix value, std::vector<std::size_t> parents, BackwardFn backward);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  OpKind op(std::size_t id) const { return nodes_.at(id).op; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::span<const std::size_t> parents(std::size_t id) const { return nodes_.at(id).parents; }

  // Gradient of the last backward() loss w.r.t. the node; zeros if never touched.
  Matrix grad(Var v) const;
  std::vector<std::size_t> leaves() const;

  // Requires a 1x1 loss. Seeds d(loss)/d(loss) = 1 and sweeps in reverse tape order.
  void backward(Var loss);
  void zero_grad();

  void accumulate(std::size_t id, const DenseRowMajor& delta);
  void accumulate(Var v, const DenseRowMajor& delta) { accumulate(v.id(), delta); }

  void check_owned(Var v, const char* op_name) const;

 private:
  struct Node {
    Matrix value;
    DenseRowMajor grad;  // empty until something flows in
    OpKind op = OpKind::Constant;
    std::vector<std::size_t> parents;
    bool requires_grad = false;
    BackwardFn backward;
  };

  // deque keeps value references stable while new nodes are appended
  std::deque<Node> nodes_;
};

// Binary entrywise ops require identical shapes.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

// a (n x d) + row (1 x d), broadcast over rows.
Var add_row_broadcast(Var a, Var row);
// a (n x d) scaled row-wise by col (n x 1).
Var mul_col_broadcast(Var a, Var col);

Var sum(Var a);
Var mean(Var a);
Var frobenius_sq(Var a);
Var trace(Var a);
Var row_sum(Var a);   // n x d -> n x 1
Var col_mean(Var a);  // n x d -> 1 x d

Var rowwise_softmax(Var a);
Var concat_cols(Var a, Var b);
Var concat_cols(std::span<const Var> parts);
// Columns [from, to).
Var slice_cols(Var a, std::size_t from, std::size_t to);
// Entrywise product with a constant matrix; no gradient flows to the mask.
Var hadamard_const(Var a, const Matrix& mask);

// Mean over the selected rows of -sum_c target(r,c) * log_softmax(logits)(r,c).
// Targets and row selection are constants. Log-softmax is computed with
// row-max subtraction so confident logits never produce log(0).
Var softmax_cross_entropy(Var logits, const Matrix& targets,
                          std::span<const std::size_t> rows);

// Unary op with a caller-supplied vector-Jacobian product. Used for tests of
// the gradient checker and for one-off kernels.
using VjpFn = std::function<Matrix(const Matrix& grad_out, const Matrix& input,
                                   const Matrix& output)>;
Var custom_unary(Var a, Matrix value, VjpFn vjp);

// Entrywise sigmoid of a plain matrix.
Matrix sigmoid(const Matrix& m);
// Row-wise softmax of a plain matrix (row-max subtracted).
Matrix rowwise_softmax(const Matrix& m);

}  // namespace mgmc::ad
