#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace prnn {

// Dense row-major matrix of 64-bit floats. Every weight block, episode
// value table and batch tensor in the project is one of these.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a·b. Throws std::invalid_argument naming both shapes on inner-dimension
// mismatch. 64-bit accumulation throughout.
Matrix matmul(const Matrix& a, const Matrix& b);

// out += a·b (out must already have the product shape).
void matmul_acc(Matrix& out, const Matrix& a, const Matrix& b);
// out += aᵀ·b without materializing the transpose.
void matmul_tn_acc(Matrix& out, const Matrix& a, const Matrix& b);
// out += a·bᵀ without materializing the transpose.
void matmul_nt_acc(Matrix& out, const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

enum class Act { sigmoid, tanh };

double sigmoid(double x);

// Elementwise activation of x.
Matrix activate(const Matrix& x, Act kind);
// Derivative expressed in terms of the activated value y:
// sigmoid' = y(1-y), tanh' = 1-y².
Matrix activate_grad_from_y(const Matrix& y, Act kind);

}  // namespace prnn
