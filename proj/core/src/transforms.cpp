#include "semattack/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "semattack/error.hpp"
#include "semattack/image.hpp"

namespace semattack {

namespace {

constexpr double kOrthonormalTolerance = 1e-8;

const Matrix& require_basis(const TransformSpec& spec) {
  if (!spec.basis) throw InvalidArgument(to_string(spec.kind) + " transform needs a basis U");
  return *spec.basis;
}

void check_shapes(const TransformSpec& spec, const Vector& x, const Vector& delta) {
  const std::size_t expected = spec.param_count(x.size());
  if (delta.size() != expected) {
    throw DimensionMismatch(to_string(spec.kind) + " expects " + std::to_string(expected) +
                            " parameters, got " + std::to_string(delta.size()));
  }
  if (spec.basis && spec.basis->rows() != x.size()) {
    throw DimensionMismatch("basis has " + std::to_string(spec.basis->rows()) +
                            " rows for an input of dimension " + std::to_string(x.size()));
  }
}

Vector affine_resample(const Vector& x, const Vector& delta) {
  const std::size_t side = square_side(x.size());
  const double theta = delta[0] * std::numbers::pi / 180.0;
  const double shift_x = std::round(delta[1]);
  const double shift_y = std::round(delta[2]);
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double center = (static_cast<double>(side) - 1.0) / 2.0;

  Vector out(x.size());
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      // Inverse map: undo the shift, then rotate by -theta about the center.
      const double dr = static_cast<double>(r) - shift_y - center;
      const double dc = static_cast<double>(c) - shift_x - center;
      const double src_r = cos_t * dr - sin_t * dc + center;
      const double src_c = sin_t * dr + cos_t * dc + center;
      out[r * side + c] = bilinear_sample(x.span(), side, src_r, src_c);
    }
  }
  return out;
}

// G before rectification.
Vector linear_stage(const TransformSpec& spec, const Vector& x, const Vector& delta) {
  switch (spec.kind) {
    case TransformKind::pixel_additive:
      return x + delta;
    case TransformKind::subspace_additive:
      return x + matvec(require_basis(spec), delta);
    case TransformKind::rank_multiplicative: {
      const Matrix& u = require_basis(spec);
      Vector coeff = matvec_transposed(u, x);
      for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] *= delta[j];
      return matvec(u, coeff);
    }
    case TransformKind::affine_spatial:
      return affine_resample(x, delta);
  }
  throw InvalidArgument("unknown transform kind");
}

Vector scale_vector(const Vector& v, double t) { return t * v; }

}  // namespace

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::pixel_additive:
      return "pixel_additive";
    case TransformKind::subspace_additive:
      return "subspace_additive";
    case TransformKind::rank_multiplicative:
      return "rank_multiplicative";
    case TransformKind::affine_spatial:
      return "affine_spatial";
  }
  return "unknown";
}

TransformKind transform_kind_from_string(const std::string& name) {
  for (auto kind : {TransformKind::pixel_additive, TransformKind::subspace_additive,
                    TransformKind::rank_multiplicative, TransformKind::affine_spatial}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument("unknown transform kind '" + name + "'");
}

std::size_t TransformSpec::param_count(std::size_t d) const {
  switch (kind) {
    case TransformKind::pixel_additive:
      return d;
    case TransformKind::subspace_additive:
    case TransformKind::rank_multiplicative:
      return k();
    case TransformKind::affine_spatial:
      return 3;
  }
  return 0;
}

Vector TransformSpec::identity_params(std::size_t d) const {
  return Vector(param_count(d), kind == TransformKind::rank_multiplicative ? 1.0 : 0.0);
}

void TransformSpec::validate(std::size_t d) const {
  if (box.low > box.high) throw InvalidArgument("parameter box has low > high");
  if (eps_linf && !(*eps_linf >= 0.0)) throw InvalidArgument("eps_linf must be >= 0");
  switch (kind) {
    case TransformKind::subspace_additive:
    case TransformKind::rank_multiplicative: {
      const Matrix& u = require_basis(*this);
      if (u.rows() != d) throw DimensionMismatch("basis row count differs from input dimension");
      if (u.cols() < 1 || u.cols() > d) throw InvalidArgument("basis rank must be in [1, d]");
      if (orthonormality_error(u) > kOrthonormalTolerance) {
        throw InvalidArgument("basis columns are not orthonormal");
      }
      break;
    }
    case TransformKind::affine_spatial:
      square_side(d);
      break;
    case TransformKind::pixel_additive:
      break;
  }
  if (eps_linf) {
    const double anchor = kind == TransformKind::rank_multiplicative ? 1.0 : 0.0;
    if (kind != TransformKind::affine_spatial && (box.low > anchor || box.high < anchor)) {
      throw InvalidArgument("an l_inf budget needs the identity parameters inside the box");
    }
  }
}

TransformSpec TransformSpec::pixel(ParamBox box, std::optional<double> eps_linf, bool rectified) {
  TransformSpec spec;
  spec.kind = TransformKind::pixel_additive;
  spec.box = box;
  spec.eps_linf = eps_linf;
  spec.rectified = rectified;
  return spec;
}

TransformSpec TransformSpec::subspace(Matrix basis, ParamBox box, std::optional<double> eps_linf,
                                      bool rectified) {
  TransformSpec spec = pixel(box, eps_linf, rectified);
  spec.kind = TransformKind::subspace_additive;
  spec.basis = std::move(basis);
  return spec;
}

TransformSpec TransformSpec::multiplicative(Matrix basis, ParamBox box,
                                            std::optional<double> eps_linf, bool rectified) {
  TransformSpec spec = subspace(std::move(basis), box, eps_linf, rectified);
  spec.kind = TransformKind::rank_multiplicative;
  return spec;
}

TransformSpec TransformSpec::affine() {
  TransformSpec spec;
  spec.kind = TransformKind::affine_spatial;
  spec.box = {-180.0, 180.0};
  return spec;
}

Vector transform_forward(const TransformSpec& spec, const Vector& x, const Vector& delta) {
  check_shapes(spec, x, delta);
  Vector out = linear_stage(spec, x, delta);
  if (spec.rectified) {
    for (double& v : out) v = std::max(v, 0.0);
  }
  return out;
}

Vector transform_vjp(const TransformSpec& spec, const Vector& x, const Vector& delta,
                     const Vector& upstream) {
  if (!spec.differentiable()) {
    throw UnsupportedTransform("affine_spatial is grid-searched and has no parameter gradient");
  }
  check_shapes(spec, x, delta);
  if (upstream.size() != x.size()) throw DimensionMismatch("vjp upstream dimension");

  Vector g = upstream;
  if (spec.rectified) {
    const Vector pre = linear_stage(spec, x, delta);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(pre[i] > 0.0)) g[i] = 0.0;
    }
  }
  switch (spec.kind) {
    case TransformKind::pixel_additive:
      return g;
    case TransformKind::subspace_additive:
      return matvec_transposed(*spec.basis, g);
    case TransformKind::rank_multiplicative: {
      // d x~ / d delta_j = (u_j^T x) u_j.
      Vector coeff = matvec_transposed(*spec.basis, x);
      const Vector proj = matvec_transposed(*spec.basis, g);
      for (std::size_t j = 0; j < coeff.size(); ++j) coeff[j] *= proj[j];
      return coeff;
    }
    case TransformKind::affine_spatial:
      break;
  }
  throw UnsupportedTransform("no vjp for " + to_string(spec.kind));
}

bool is_feasible(const TransformSpec& spec, const Vector& x, const Vector& delta, double tol) {
  check_shapes(spec, x, delta);
  if (spec.kind != TransformKind::affine_spatial) {
    for (double v : delta) {
      if (v < spec.box.low - tol || v > spec.box.high + tol) return false;
    }
  }
  if (!spec.eps_linf || spec.kind == TransformKind::affine_spatial) return true;
  return linf_distance(linear_stage(spec, x, delta), x) <= *spec.eps_linf + tol;
}

Vector project_params(const TransformSpec& spec, const Vector& x, const Vector& delta) {
  check_shapes(spec, x, delta);
  if (spec.kind == TransformKind::affine_spatial) return delta;

  Vector out = clamp(delta, spec.box.low, spec.box.high);
  if (!spec.eps_linf) return out;
  const double eps = *spec.eps_linf;

  switch (spec.kind) {
    case TransformKind::pixel_additive:
      return clamp(std::move(out), std::max(-eps, spec.box.low), std::min(eps, spec.box.high));

    case TransformKind::subspace_additive: {
      const double reach = norm_linf(matvec(*spec.basis, out));
      if (reach <= eps) return out;
      if (eps == 0.0) return Vector(out.size());
      // The perturbation is linear in the multiplier, so the largest feasible
      // multiplier is eps / reach; step down by ulps until rounding agrees.
      double t = eps / reach;
      Vector scaled = scale_vector(out, t);
      while (norm_linf(matvec(*spec.basis, scaled)) > eps) {
        t = std::nextafter(t, 0.0);
        scaled = scale_vector(out, t);
      }
      return scaled;
    }

    case TransformKind::rank_multiplicative: {
      const Vector ones(out.size(), 1.0);
      if (linf_distance(linear_stage(spec, x, out), x) <= eps) return out;
      const Vector step = out - ones;
      double t = 1.0;
      for (int i = 0; i < kMaxBacktracks; ++i) {
        t *= 0.5;
        Vector candidate = ones + scale_vector(step, t);
        if (linf_distance(linear_stage(spec, x, candidate), x) <= eps) return candidate;
      }
      return ones;
    }

    case TransformKind::affine_spatial:
      break;
  }
  return out;
}

EncodedAttributes attribute_encode(const Vector& a, ParamBox box) {
  if (box.low > box.high) throw InvalidArgument("attribute box has low > high");
  EncodedAttributes enc;
  enc.values.reserve(2 * a.size());
  for (double v : a) {
    const double c = std::clamp(v, box.low, box.high);
    enc.values.push_back(1.0 - c);
    enc.values.push_back(c);
  }
  return enc;
}

Vector attribute_encode_vjp(const Vector& a, ParamBox box, std::span<const double> upstream) {
  if (box.low > box.high) throw InvalidArgument("attribute box has low > high");
  if (upstream.size() != 2 * a.size()) throw DimensionMismatch("encoded upstream size");
  Vector g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool clamped = a[i] < box.low || a[i] > box.high;
    g[i] = clamped ? 0.0 : upstream[2 * i + 1] - upstream[2 * i];
  }
  return g;
}

Matrix nested_basis(std::size_t d, std::size_t k, std::uint64_t seed) {
  // Columns are drawn sequentially from one stream, so the first k columns
  // do not depend on how many more are requested.
  SeededRng rng(seed);
  return random_orthonormal(d, k, rng);
}

Json transform_to_json(const TransformSpec& spec) {
  Json doc;
  doc["kind"] = to_string(spec.kind);
  doc["k"] = spec.k();
  doc["U"] = spec.basis ? to_json(*spec.basis) : Json(nullptr);
  doc["rectified"] = spec.rectified;
  doc["box"] = {spec.box.low, spec.box.high};
  doc["eps_linf"] = spec.eps_linf ? Json(*spec.eps_linf) : Json(nullptr);
  doc["seed"] = spec.seed ? Json(*spec.seed) : Json(nullptr);
  return doc;
}

TransformSpec transform_from_json(const Json& doc) {
  try {
    TransformSpec spec;
    spec.kind = transform_kind_from_string(doc.at("kind").get<std::string>());
    if (doc.contains("U") && !doc.at("U").is_null()) {
      spec.basis = matrix_from_json(doc.at("U"));
    } else if (doc.contains("seed") && !doc.at("seed").is_null() && doc.contains("d") &&
               doc.value("k", 0) > 0) {
      spec.basis = nested_basis(doc.at("d").get<std::size_t>(), doc.at("k").get<std::size_t>(),
                                doc.at("seed").get<std::uint64_t>());
    }
    spec.rectified = doc.value("rectified", false);
    if (doc.contains("box")) {
      const auto box = doc.at("box").get<std::vector<double>>();
      if (box.size() != 2) throw IoError("transform box must be [low, high]");
      spec.box = {box[0], box[1]};
    }
    if (doc.contains("eps_linf") && !doc.at("eps_linf").is_null()) {
      spec.eps_linf = doc.at("eps_linf").get<double>();
    }
    if (doc.contains("seed") && !doc.at("seed").is_null()) {
      spec.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (spec.basis && doc.contains("k") && doc.at("k").get<std::size_t>() != spec.k()) {
      throw IoError("transform k does not match the basis");
    }
    return spec;
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed transform spec: ") + e.what());
  }
}

}  // namespace semattack
