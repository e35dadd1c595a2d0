#include "prnn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace prnn {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_inner_match(const char* op, const Matrix& a, const Matrix& b,
                         std::size_t a_inner, std::size_t b_inner) {
  if (a_inner != b_inner) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                shape_str(a) + ")·(" + shape_str(b) + ")");
  }
}

void require_out_shape(const char* op, const Matrix& out, std::size_t rows,
                       std::size_t cols) {
  if (out.rows() != rows || out.cols() != cols) {
    throw std::invalid_argument(std::string(op) + ": output shape " + shape_str(out) +
                                ", expected " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void matmul_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  require_inner_match("matmul", a, b, a.cols(), b.rows());
  require_out_shape("matmul", out, a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    double* orow = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_inner_match("matmul", a, b, a.cols(), b.rows());
  Matrix out(a.rows(), b.cols());
  matmul_acc(out, a, b);
  return out;
}

void matmul_tn_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  require_inner_match("matmul_tn", a, b, a.rows(), b.rows());
  require_out_shape("matmul_tn", out, a.cols(), b.cols());
  const std::size_t n = a.rows(), ka = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * ka;
    const double* brow = b.data() + i * m;
    for (std::size_t p = 0; p < ka; ++p) {
      const double av = arow[p];
      double* orow = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_nt_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  require_inner_match("matmul_nt", a, b, a.cols(), b.cols());
  require_out_shape("matmul_nt", out, a.rows(), b.rows());
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    double* orow = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] += acc;
    }
  }
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix activate(const Matrix& x, Act kind) {
  Matrix y(x.rows(), x.cols());
  const double* in = x.data();
  double* out = y.data();
  if (kind == Act::sigmoid) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(in[i]);
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(in[i]);
  }
  return y;
}

Matrix activate_grad_from_y(const Matrix& y, Act kind) {
  Matrix g(y.rows(), y.cols());
  const double* in = y.data();
  double* out = g.data();
  if (kind == Act::sigmoid) {
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = in[i] * (1.0 - in[i]);
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = 1.0 - in[i] * in[i];
  }
  return g;
}

}  // namespace prnn
