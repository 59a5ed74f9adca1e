#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "semattack/tensor.hpp"

namespace semattack::testing {

/// Central differences of a scalar function, step h.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& at,
                               double h = 1e-5) {
  Vector g(at.size());
  Vector probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b||_2 / max(||a||_2, ||b||_2, floor).
inline double relative_error(const Vector& a, const Vector& b, double floor = 1e-8) {
  return norm_l2(a - b) / std::max({norm_l2(a), norm_l2(b), floor});
}

inline Vector random_vector(std::size_t n, SeededRng& rng, double scale = 1.0) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace semattack::testing
