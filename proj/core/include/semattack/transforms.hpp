#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semattack/io.hpp"
#include "semattack/tensor.hpp"

namespace semattack {

enum class TransformKind { pixel_additive, subspace_additive, rank_multiplicative, affine_spatial };

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

struct ParamBox {
  double low = -3.0;
  double high = 3.0;

  bool operator==(const ParamBox&) const = default;
};

/// A parametric transform x~ = G(x, delta).
///
///   pixel_additive       x + delta                      (d parameters)
///   subspace_additive    x + U delta                    (k parameters)
///   rank_multiplicative  U diag(delta) U^T x            (k parameters)
///   affine_spatial       rotate by delta[0] degrees, then shift by the
///                        rounded (delta[1], delta[2]) pixels, on the
///                        sqrt(d) x sqrt(d) image view    (3 parameters)
///
/// With `rectified` the output passes through max(., 0). `eps_linf` bounds
/// the linear stage, ||G_lin(x, delta) - x||_inf <= eps, measured before
/// rectification.
struct TransformSpec {
  TransformKind kind = TransformKind::subspace_additive;
  std::optional<Matrix> basis;
  bool rectified = false;
  ParamBox box;
  std::optional<double> eps_linf;
  std::optional<std::uint64_t> seed;

  std::size_t k() const noexcept { return basis ? basis->cols() : 0; }
  std::size_t param_count(std::size_t d) const;
  bool differentiable() const noexcept { return kind != TransformKind::affine_spatial; }

  /// Parameters that reproduce the input: zeros for additive kinds, ones for
  /// rank_multiplicative, (0, 0, 0) for affine_spatial.
  Vector identity_params(std::size_t d) const;

  /// Throws on shape or orthonormality violations for inputs of dimension d.
  void validate(std::size_t d) const;

  static TransformSpec pixel(ParamBox box, std::optional<double> eps_linf, bool rectified = false);
  static TransformSpec subspace(Matrix basis, ParamBox box, std::optional<double> eps_linf,
                                bool rectified = false);
  static TransformSpec multiplicative(Matrix basis, ParamBox box, std::optional<double> eps_linf,
                                     bool rectified = false);
  static TransformSpec affine();
};

Vector transform_forward(const TransformSpec& spec, const Vector& x, const Vector& delta);

/// J^T upstream with J = d transform_forward / d delta. Rectified transforms
/// mask `upstream` by the positive part of the linear stage first. Throws
/// UnsupportedTransform for affine_spatial.
Vector transform_vjp(const TransformSpec& spec, const Vector& x, const Vector& delta,
                     const Vector& upstream);

/// Box constraint and, when set, the l_inf budget. Additive kinds scale delta
/// toward zero; rank_multiplicative backtracks toward the identity
/// parameters by halving (at most kMaxBacktracks times) and falls back to
/// the identity. The result satisfies is_feasible whenever any point on the
/// segment to the identity does.
Vector project_params(const TransformSpec& spec, const Vector& x, const Vector& delta);

inline constexpr int kMaxBacktracks = 60;

bool is_feasible(const TransformSpec& spec, const Vector& x, const Vector& delta,
                 double tol = 1e-9);

/// Pairs (1 - a_i, a_i) after clamping each a_i into the box.
struct EncodedAttributes {
  std::vector<double> values;  // 2k entries

  std::size_t attributes() const noexcept { return values.size() / 2; }
  double off(std::size_t i) const { return values[2 * i]; }
  double on(std::size_t i) const { return values[2 * i + 1]; }
};

EncodedAttributes attribute_encode(const Vector& a, ParamBox box);

/// Gradient with respect to `a` given the gradient with respect to the
/// encoded pairs: upstream_on - upstream_off per attribute, zero where the
/// clamp is active.
Vector attribute_encode_vjp(const Vector& a, ParamBox box, std::span<const double> upstream);

/// First k columns of a seeded d x d orthonormal basis; bases from the same
/// seed are nested in k.
Matrix nested_basis(std::size_t d, std::size_t k, std::uint64_t seed);

Json transform_to_json(const TransformSpec& spec);
TransformSpec transform_from_json(const Json& doc);

}  // namespace semattack
