#include "mgmc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mgmc/errors.hpp"

namespace mgmc {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Dimension: return "dimension";
    case ErrorCategory::Contract: return "contract";
    case ErrorCategory::Bounds: return "bounds";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Determinism: return "determinism";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Schema: return "schema";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data:
    case ErrorCategory::Schema: return 3;
    case ErrorCategory::Numeric:
    case ErrorCategory::Determinism: return 4;
    case ErrorCategory::Io: return 5;
    default: return 6;
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) {
  if (!std::isfinite(fill)) throw NumericError("Matrix fill value is not finite");
  m_ = DenseRowMajor::Constant(static_cast<Eigen::Index>(rows),
                               static_cast<Eigen::Index>(cols), fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw DimensionError("Matrix data length " + std::to_string(data.size()) +
                         " does not match shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  m_.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (!data.empty()) std::memcpy(m_.data(), data.data(), data.size() * sizeof(double));
  require_finite(*this, "Matrix construction");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  m_.resize(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged initializer list for Matrix");
    std::size_t j = 0;
    for (double v : row) m_(i, j++) = v;
    ++i;
  }
  require_finite(*this, "Matrix construction");
}

Matrix::Matrix(DenseRowMajor dense) : m_(std::move(dense)) {
  require_finite(*this, "Matrix construction");
}

Matrix Matrix::identity(std::size_t n) {
  return Matrix(DenseRowMajor::Identity(static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(n)));
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix out(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out(i, i) = values[i];
  require_finite(out, "Matrix::diagonal");
  return out;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows()) + "x" + std::to_string(cols());
}

double Matrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) {
    throw BoundsError("index (" + std::to_string(r) + "," + std::to_string(c) +
                      ") outside " + shape_string());
  }
  return m_(r, c);
}

Matrix Matrix::transpose() const { return Matrix(DenseRowMajor(m_.transpose())); }

bool Matrix::all_finite() const noexcept { return m_.allFinite(); }

double Matrix::max_abs() const noexcept {
  return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff();
}

bool operator==(const Matrix& a, const Matrix& b) noexcept {
  if (!a.same_shape(b)) return false;
  return a.size() == 0 ||
         std::memcmp(a.m_.data(), b.m_.data(), a.size() * sizeof(double)) == 0;
}

void require_finite(const Matrix& m, const char* context) {
  if (!m.all_finite()) {
    throw NumericError(std::string(context) + ": non-finite entry in " +
                       m.shape_string() + " matrix");
  }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("max_abs_diff shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
  return a.size() == 0 ? 0.0 : (a.dense() - b.dense()).cwiseAbs().maxCoeff();
}

}  // namespace mgmc
