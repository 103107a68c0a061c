#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mgmc {

using DenseRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major double matrix. Every entry is finite; construction from
// data containing NaN or Inf throws NumericError. A 0x0 matrix is the only
// empty shape and is used as the "unset" value.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);
  explicit Matrix(DenseRowMajor dense);

  static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
  static Matrix ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }
  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(m_.cols()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(m_.size()); }
  bool empty() const noexcept { return m_.size() == 0; }
  bool same_shape(const Matrix& other) const noexcept {
    return rows() == other.rows() && cols() == other.cols();
  }
  std::string shape_string() const;

  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
  double& operator()(std::size_t r, std::size_t c) { return m_(r, c); }
  double at(std::size_t r, std::size_t c) const;

  std::span<const double> data() const noexcept { return {m_.data(), size()}; }
  std::span<double> data() noexcept { return {m_.data(), size()}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {m_.data() + r * cols(), cols()};
  }

  const DenseRowMajor& dense() const noexcept { return m_; }
  DenseRowMajor& dense() noexcept { return m_; }

  Matrix transpose() const;
  bool all_finite() const noexcept;
  double max_abs() const noexcept;

  // Bitwise equality of shape and every entry.
  friend bool operator==(const Matrix& a, const Matrix& b) noexcept;

 private:
  DenseRowMajor m_;
};

// Throws NumericError when any entry is NaN or Inf.
void require_finite(const Matrix& m, const char* context);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace mgmc
