#include "irnn/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "irnn/errors.hpp"

namespace irnn {

void Vector::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw ShapeError("Matrix: ragged initializer rows");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string to_string(Activation a) { return a == Activation::Sigmoid ? "sigmoid" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw UsageError("unknown activation '" + name + "' (expected sigmoid or tanh)");
}

Vector matvec(ConstMatrixView m, const Vector& v) {
  if (m.cols != v.dim()) {
    throw ShapeError("matvec: matrix is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                     " but vector has dim " + std::to_string(v.dim()));
  }
  Vector out(m.rows);
  matvec_acc(m, v.span(), out.span());
  return out;
}

void matvec_acc(ConstMatrixView m, std::span<const double> v, std::span<double> out) {
  assert(m.cols == v.size() && m.rows == out.size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data + i * m.cols;
    double acc = out[i];
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

void matvec_transpose_acc(ConstMatrixView m, std::span<const double> v, std::span<double> out) {
  assert(m.rows == v.size() && m.cols == out.size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data + i * m.cols;
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j] * vi;
  }
}

void outer_acc(MatrixView g, std::span<const double> a, std::span<const double> b) {
  assert(g.rows == a.size() && g.cols == b.size());
  for (std::size_t i = 0; i < g.rows; ++i) {
    double* row = g.data + i * g.cols;
    const double ai = a[i];
    for (std::size_t j = 0; j < g.cols; ++j) row[j] += ai * b[j];
  }
}

double sigmoid(double x) noexcept {
  // Branch keeps exp() from overflowing for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void activation_inplace(Activation kind, std::span<double> v) noexcept {
  if (kind == Activation::Sigmoid) {
    for (double& x : v) x = sigmoid(x);
  } else {
    for (double& x : v) x = std::tanh(x);
  }
}

Vector activation(Activation kind, const Vector& v) {
  Vector out = v;
  activation_inplace(kind, out.span());
  return out;
}

double activation_derivative(Activation kind, double a) noexcept {
  return kind == Activation::Sigmoid ? a * (1.0 - a) : 1.0 - a * a;
}

Vector activation_derivative(Activation kind, const Vector& activated) {
  Vector out(activated.dim());
  for (std::size_t i = 0; i < out.dim(); ++i) out[i] = activation_derivative(kind, activated[i]);
  return out;
}

}  // namespace irnn
