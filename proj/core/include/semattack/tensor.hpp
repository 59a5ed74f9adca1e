#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "semattack/rng.hpp"

namespace semattack {

/// Dense real vector.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
  Vector(std::initializer_list<double> values) : data_(values) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale);

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector lhs, const Vector& rhs);
Vector operator-(Vector lhs, const Vector& rhs);
Vector operator*(double scale, Vector v);
Vector operator-(Vector v);

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector row_vector(std::size_t r) const;

  Vector column(std::size_t c) const;
  void set_column(std::size_t c, const Vector& v);
  void set_row(std::size_t r, std::span<const double> v);

  /// First `k` columns as a new rows() x k matrix.
  Matrix leading_columns(std::size_t k) const;

  std::vector<std::vector<double>> to_rows() const;

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
inline double dot(const Vector& a, const Vector& b) { return dot(a.span(), b.span()); }

double norm_l1(std::span<const double> v);
double norm_l2(std::span<const double> v);
double norm_linf(std::span<const double> v);
inline double norm_l1(const Vector& v) { return norm_l1(v.span()); }
inline double norm_l2(const Vector& v) { return norm_l2(v.span()); }
inline double norm_linf(const Vector& v) { return norm_linf(v.span()); }

/// ||a - b||_inf.
double linf_distance(const Vector& a, const Vector& b);

Vector clamp(Vector v, double low, double high);
bool all_finite(std::span<const double> v);

/// A * x.
Vector matvec(const Matrix& a, const Vector& x);
/// A^T * x.
Vector matvec_transposed(const Matrix& a, const Vector& x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// max_ij |A_ij - B_ij|.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// ||U^T U - I||_max.
double orthonormality_error(const Matrix& u);

inline constexpr std::size_t kExactOperatorNormMaxCols = 24;

struct OperatorNorm {
  double value = 0.0;
  // false when the entrywise-sum upper bound was used instead of enumeration.
  bool exact = true;
};

/// Operator norm from l_inf to l_1: max over ||v||_inf <= 1 of ||A v||_1.
///
/// The maximum is attained at a sign vector, so for up to
/// kExactOperatorNormMaxCols columns all 2^(cols-1) sign patterns (v and -v
/// give the same value) are visited in Gray-code order, updating A v with a
/// single column per step. Wider matrices get sum_ij |A_ij|, which is an
/// upper bound.
OperatorNorm op_norm_inf_to_one(const Matrix& a);

/// d x k matrix with orthonormal columns: modified Gram-Schmidt with one
/// re-orthogonalization pass over i.i.d. standard normal columns.
Matrix random_orthonormal(std::size_t d, std::size_t k, SeededRng& rng);

/// mean + sigma * N(0, I).
Vector gaussian_vector(const Vector& mean, double sigma, SeededRng& rng);

}  // namespace semattack
