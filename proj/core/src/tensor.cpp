#include "semattack/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "semattack/error.hpp"

namespace semattack {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

Vector& Vector::operator+=(const Vector& other) {
  require_same_size(size(), other.size(), "vector add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_size(size(), other.size(), "vector subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Vector operator+(Vector lhs, const Vector& rhs) { return lhs += rhs; }
Vector operator-(Vector lhs, const Vector& rhs) { return lhs -= rhs; }
Vector operator*(double scale, Vector v) { return v *= scale; }
Vector operator-(Vector v) { return v *= -1.0; }

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require_same_size(rows[r].size(), m.cols(), "ragged matrix rows");
    m.set_row(r, rows[r]);
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::row_vector(std::size_t r) const {
  auto s = row(r);
  return Vector(std::vector<double>(s.begin(), s.end()));
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, const Vector& v) {
  require_same_size(v.size(), rows_, "set_column");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

void Matrix::set_row(std::size_t r, std::span<const double> v) {
  require_same_size(v.size(), cols_, "set_row");
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

Matrix Matrix::leading_columns(std::size_t k) const {
  if (k > cols_) throw InvalidArgument("leading_columns: k exceeds column count");
  Matrix out(rows_, k);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < k; ++c) out(r, c) = (*this)(r, c);
  }
  return out;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm_l1(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

double norm_l2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double norm_linf(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc = std::max(acc, std::abs(x));
  return acc;
}

double linf_distance(const Vector& a, const Vector& b) {
  require_same_size(a.size(), b.size(), "linf_distance");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
  return acc;
}

Vector clamp(Vector v, double low, double high) {
  if (low > high) throw InvalidArgument("clamp: low > high");
  for (double& x : v) x = std::clamp(x, low, high);
  return v;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector matvec(const Matrix& a, const Vector& x) {
  require_same_size(a.cols(), x.size(), "matvec");
  Vector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = dot(a.row(r), x.span());
  return out;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  require_same_size(a.rows(), x.size(), "matvec_transposed");
  Vector out(a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += row[c] * xr;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_same_size(a.cols(), b.rows(), "matmul");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      auto b_row = b.row(p);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aip * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_size(a.rows(), b.rows(), "max_abs_diff rows");
  require_same_size(a.cols(), b.cols(), "max_abs_diff cols");
  double acc = 0.0;
  auto fa = a.flat();
  auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) acc = std::max(acc, std::abs(fa[i] - fb[i]));
  return acc;
}

double orthonormality_error(const Matrix& u) {
  return max_abs_diff(matmul(transpose(u), u), Matrix::identity(u.cols()));
}

OperatorNorm op_norm_inf_to_one(const Matrix& a) {
  if (a.empty()) return {0.0, true};
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();

  if (cols > kExactOperatorNormMaxCols) {
    return {norm_l1(a.flat()), false};
  }

  // Start at v = (1, ..., 1); the sign of column 0 stays fixed at +1.
  std::vector<double> av(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = a.row(r);
    for (double x : row) av[r] += x;
  }
  std::vector<int> sign(cols, 1);
  double best = norm_l1(av);

  const std::uint64_t steps = cols > 1 ? (std::uint64_t{1} << (cols - 1)) : 1;
  for (std::uint64_t g = 1; g < steps; ++g) {
    // Gray code: bit flipped between g-1 and g is the lowest set bit of g.
    const std::size_t bit = static_cast<std::size_t>(std::countr_zero(g));
    const std::size_t c = bit + 1;
    const double scale = sign[c] > 0 ? -2.0 : 2.0;
    sign[c] = -sign[c];
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      av[r] += scale * a(r, c);
      total += std::abs(av[r]);
    }
    best = std::max(best, total);
  }
  return {best, true};
}

Matrix random_orthonormal(std::size_t d, std::size_t k, SeededRng& rng) {
  if (k < 1 || k > d) {
    throw InvalidArgument("random_orthonormal: need 1 <= k <= d, got k=" + std::to_string(k) +
                          ", d=" + std::to_string(d));
  }
  Matrix u(d, k);
  std::vector<Vector> basis;
  basis.reserve(k);
  while (basis.size() < k) {
    Vector v(d);
    for (double& x : v) x = rng.normal();
    const double initial = norm_l2(v);
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) {
        const double proj = dot(q, v);
        for (std::size_t i = 0; i < d; ++i) v[i] -= proj * q[i];
      }
    }
    const double norm = norm_l2(v);
    // Nearly dependent draw; discard and redraw.
    if (!(norm > 1e-8 * initial)) continue;
    v *= 1.0 / norm;
    basis.push_back(std::move(v));
  }
  for (std::size_t c = 0; c < k; ++c) u.set_column(c, basis[c]);
  return u;
}

Vector gaussian_vector(const Vector& mean, double sigma, SeededRng& rng) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_vector: sigma must be >= 0");
  Vector out = mean;
  if (sigma == 0.0) return out;
  for (double& x : out) x += sigma * rng.normal();
  return out;
}

}  // namespace semattack
