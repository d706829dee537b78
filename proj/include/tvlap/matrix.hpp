#pragma once

/// Small dense row-major matrix kernel. Systems handled here are at most
/// ~16 states, so everything is plain loops over a std::vector<double>.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tvlap {

class Matrix {
 public:
  Matrix() = default;

  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("Matrix: expected " +
                                  std::to_string(rows_ * cols_) +
                                  " entries, got " +
                                  std::to_string(data_.size()));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("Matrix: non-finite entry");
      }
    }
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) {
        throw std::invalid_argument("Matrix: ragged initializer");
      }
      for (double v : row) {
        if (!std::isfinite(v)) {
          throw std::invalid_argument("Matrix: non-finite entry");
        }
        data_.push_back(v);
      }
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
    return m;
  }

  static Matrix column(std::span<const double> values) {
    return Matrix(values.size(), 1,
                  std::vector<double>(values.begin(), values.end()));
  }

  static Matrix diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m.set(i, i, values[i]);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  void set(std::size_t i, std::size_t j, double v) {
    if (i >= rows_ || j >= cols_) {
      throw std::out_of_range("Matrix::set: index (" + std::to_string(i) +
                              "," + std::to_string(j) + ") outside " +
                              shape());
    }
    if (!std::isfinite(v)) {
      throw std::invalid_argument("Matrix::set: non-finite entry");
    }
    data_[i * cols_ + j] = v;
  }

  std::span<const double> entries() const { return data_; }

  std::string shape() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline std::string shapes(const Matrix& a, const Matrix& b) {
  return a.shape() + " and " + b.shape();
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shapes(a, b));
  }
}

}  // namespace detail

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("mat_mul: cannot multiply " +
                                detail::shapes(a, b));
  }
  std::vector<double> out(a.rows() * b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
      out[i * b.cols() + j] = sum;
    }
  }
  return Matrix(a.rows(), b.cols(), std::move(out));
}

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  return mat_mul(a, b);
}

inline Matrix operator*(double s, const Matrix& a) {
  std::vector<double> out(a.entries().begin(), a.entries().end());
  for (double& v : out) v *= s;
  return Matrix(a.rows(), a.cols(), std::move(out));
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.entries().begin(), a.entries().end());
  auto rhs = b.entries();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += rhs[i];
  return Matrix(a.rows(), a.cols(), std::move(out));
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "subtract");
  std::vector<double> out(a.entries().begin(), a.entries().end());
  auto rhs = b.entries();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rhs[i];
  return Matrix(a.rows(), a.cols(), std::move(out));
}

inline Matrix transpose(const Matrix& a) {
  std::vector<double> out(a.rows() * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out[j * a.rows() + i] = a(i, j);
  }
  return Matrix(a.cols(), a.rows(), std::move(out));
}

/// (A + A')/2. Leaves exactly symmetric input bit-identical.
inline Matrix symmetrize(const Matrix& a) {
  if (!a.is_square()) {
    throw std::invalid_argument("symmetrize: non-square " + a.shape());
  }
  std::vector<double> out(a.rows() * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out[i * a.cols() + j] = (a(i, j) + a(j, i)) * 0.5;
    }
  }
  return Matrix(a.rows(), a.cols(), std::move(out));
}

/// Maximum absolute row sum.
inline double norm_inf(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

inline double max_abs(const Matrix& a) {
  double best = 0.0;
  for (double v : a.entries()) best = std::max(best, std::abs(v));
  return best;
}

inline double trace(const Matrix& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) sum += a(i, i);
  return sum;
}

/// Solves a * x = b for symmetric positive definite a using a root-free
/// LDL' factorization, so a 1x1 system reduces to exactly b / a.
inline Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (!a.is_square()) {
    throw std::invalid_argument("solve_spd: non-square matrix " + a.shape());
  }
  if (b.rows() != a.rows()) {
    throw std::invalid_argument("solve_spd: incompatible right-hand side " +
                                detail::shapes(a, b));
  }
  const std::size_t n = a.rows();
  const double scale = max_abs(a);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-9 * scale) {
        throw std::invalid_argument("solve_spd: matrix is not symmetric");
      }
    }
  }

  std::vector<double> l(n * n, 0.0);
  std::vector<double> d(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double dj = a(j, j);
    for (std::size_t k = 0; k < j; ++k) dj -= l[j * n + k] * l[j * n + k] * d[k];
    if (!(dj > 0.0)) {
      throw std::domain_error("solve_spd: matrix is not positive definite "
                              "(pivot " + std::to_string(dj) + " at " +
                              std::to_string(j) + ")");
    }
    d[j] = dj;
    l[j * n + j] = 1.0;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l[i * n + k] * l[j * n + k] * d[k];
      l[i * n + j] = v / dj;
    }
  }

  std::vector<double> x(b.entries().begin(), b.entries().end());
  const std::size_t m = b.cols();
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[i * m + c];
      for (std::size_t k = 0; k < i; ++k) v -= l[i * n + k] * x[k * m + c];
      x[i * m + c] = v;
    }
    for (std::size_t i = 0; i < n; ++i) x[i * m + c] /= d[i];
    for (std::size_t i = n; i-- > 0;) {
      double v = x[i * m + c];
      for (std::size_t k = i + 1; k < n; ++k) v -= l[k * n + i] * x[k * m + c];
      x[i * m + c] = v;
    }
  }
  return Matrix(n, m, std::move(x));
}

inline constexpr double kDefaultRankTolerance = 1e-10;

/// Numerical rank by Gaussian elimination with partial pivoting. A pivot
/// counts when its magnitude exceeds tol times the largest initial entry.
inline std::size_t rank(const Matrix& a, double tol = kDefaultRankTolerance) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank: tol must be positive");
  const double threshold = tol * max_abs(a);
  if (threshold == 0.0) return 0;

  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<double> w(a.entries().begin(), a.entries().end());
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t pivot = r;
    for (std::size_t i = r + 1; i < rows; ++i) {
      if (std::abs(w[i * cols + c]) > std::abs(w[pivot * cols + c])) pivot = i;
    }
    if (std::abs(w[pivot * cols + c]) <= threshold) continue;
    if (pivot != r) {
      for (std::size_t j = 0; j < cols; ++j) {
        std::swap(w[pivot * cols + j], w[r * cols + j]);
      }
    }
    for (std::size_t i = r + 1; i < rows; ++i) {
      const double f = w[i * cols + c] / w[r * cols + c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j < cols; ++j) w[i * cols + j] -= f * w[r * cols + j];
    }
    ++r;
  }
  return r;
}

inline Matrix mat_pow(const Matrix& a, unsigned k) {
  if (!a.is_square()) {
    throw std::invalid_argument("mat_pow: non-square matrix " + a.shape());
  }
  Matrix out = Matrix::identity(a.rows());
  for (unsigned i = 0; i < k; ++i) out = out * a;
  return out;
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.set(i, j, a(i, j));
  }
  for (std::size_t i = 0; i < b.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      out.set(a.rows() + i, a.cols() + j, b(i, j));
    }
  }
  return out;
}

inline Matrix hstack(const Matrix& a, const Matrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("hstack: row mismatch " +
                                detail::shapes(a, b));
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.set(i, j, a(i, j));
    for (std::size_t j = 0; j < b.cols(); ++j) out.set(i, a.cols() + j, b(i, j));
  }
  return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("vstack: column mismatch " +
                                detail::shapes(a, b));
  }
  std::vector<double> out(a.entries().begin(), a.entries().end());
  out.insert(out.end(), b.entries().begin(), b.entries().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(out));
}

/// Top-left rows x cols block.
inline Matrix leading_block(const Matrix& a, std::size_t rows,
                            std::size_t cols) {
  if (rows > a.rows() || cols > a.cols()) {
    throw std::invalid_argument("leading_block: " + std::to_string(rows) +
                                "x" + std::to_string(cols) + " exceeds " +
                                a.shape());
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out.set(i, j, a(i, j));
  }
  return out;
}

inline std::string to_string(const Matrix& a) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (std::size_t i = 0; i < a.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < a.cols(); ++j) os << (j ? " " : "") << a(i, j);
  }
  os << "]";
  return os.str();
}

}  // namespace tvlap
