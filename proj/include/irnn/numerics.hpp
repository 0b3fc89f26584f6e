#pragma once

// Small dense linear algebra used by the recurrent cells. Row-major storage,
// left-to-right summation everywhere so results are bit-reproducible.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace irnn {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
  explicit Vector(std::span<const double> values) : data_(values.begin(), values.end()) {}

  std::size_t dim() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  operator std::span<const double>() const noexcept { return data_; }

  const std::vector<double>& values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  void fill(double value);
  bool all_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

/// Non-owning read-only view of a row-major matrix.
struct ConstMatrixView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  const double* data = nullptr;

  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  bool empty() const noexcept { return rows == 0 || cols == 0; }
};

/// Non-owning mutable view of a row-major matrix.
struct MatrixView {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double* data = nullptr;

  double& operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }
  operator ConstMatrixView() const noexcept { return {rows, cols, data}; }
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Row-major initializer; throws ShapeError on ragged rows.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const double> values() const noexcept { return data_; }
  MatrixView view() noexcept { return {rows_, cols_, data_.data()}; }
  ConstMatrixView view() const noexcept { return {rows_, cols_, data_.data()}; }
  operator ConstMatrixView() const noexcept { return view(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { Sigmoid, Tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// m · v. Throws ShapeError when m.cols != v.dim().
Vector matvec(ConstMatrixView m, const Vector& v);

// Hot-path kernels. Callers guarantee the shapes; they are checked only in
// debug builds.

/// out[i] += Σ_j m(i,j)·v[j], summing j left to right into out[i].
void matvec_acc(ConstMatrixView m, std::span<const double> v, std::span<double> out);
/// out[j] += Σ_i m(i,j)·v[i].
void matvec_transpose_acc(ConstMatrixView m, std::span<const double> v, std::span<double> out);
/// g(i,j) += a[i]·b[j].
void outer_acc(MatrixView g, std::span<const double> a, std::span<const double> b);

double sigmoid(double x) noexcept;

/// Elementwise activation.
Vector activation(Activation kind, const Vector& v);
void activation_inplace(Activation kind, std::span<double> v) noexcept;

/// Derivative expressed through the activation's output: s(1-s) or 1-t².
Vector activation_derivative(Activation kind, const Vector& activated);
double activation_derivative(Activation kind, double activated) noexcept;

}  // namespace irnn
