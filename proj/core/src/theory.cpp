#include "semattack/theory.hpp"

#include <cmath>
#include <numbers>

#include "semattack/error.hpp"
#include "semattack/models.hpp"

namespace semattack {

namespace {

constexpr double kUnitTolerance = 1e-10;
constexpr double kOrthonormalTolerance = 1e-8;

}  // namespace

void BoundInputs::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw InvalidArgument("bound inputs: empty w_hat");
  if (theta_star.size() != d || basis.rows() != d) {
    throw DimensionMismatch("bound inputs: w_hat, theta_star and U disagree on d");
  }
  if (std::abs(norm_l2(w_hat) - 1.0) > kUnitTolerance) {
    throw InvalidArgument("bound inputs: w_hat must have unit l2 norm");
  }
  if (basis.cols() < 1 || orthonormality_error(basis) > kOrthonormalTolerance) {
    throw InvalidArgument("bound inputs: U must have orthonormal columns");
  }
  if (!(eps >= 0.0)) throw InvalidArgument("bound inputs: eps must be >= 0");
  if (!(sigma > 0.0)) throw InvalidArgument("bound inputs: sigma must be > 0");
}

BoundTerms bound_terms(const BoundInputs& in) {
  in.validate();
  BoundTerms t;
  t.margin = dot(in.w_hat, in.theta_star);
  const OperatorNorm op = op_norm_inf_to_one(in.basis);
  t.norm_inf1 = op.value;
  t.norm_exact = op.exact;
  const Vector wbar = matvec_transposed(in.basis, in.w_hat);
  t.wbar_inf = norm_linf(wbar);
  t.wbar_one = norm_l1(wbar);
  t.rho_l1 = t.norm_inf1 * in.eps * t.wbar_one;
  t.rho_k_linf = static_cast<double>(in.k()) * t.norm_inf1 * in.eps * t.wbar_inf;
  return t;
}

bool precondition_holds(const BoundInputs& in) {
  const BoundTerms t = bound_terms(in);
  return t.margin >= t.rho_k_linf;
}

double robust_error_bound(const BoundInputs& in) {
  const BoundTerms t = bound_terms(in);
  if (!(t.margin >= t.rho_k_linf)) {
    throw PreconditionFailed("robust_error_bound: <w_hat, theta_star> = " +
                                 std::to_string(t.margin) + " < k ||U||_{inf,1} ||w_hat^T U||_inf eps = " +
                                 std::to_string(t.rho_k_linf),
                             t.margin, t.rho_k_linf);
  }
  const double gap = t.margin - t.rho_k_linf;
  return std::exp(-(gap * gap) / (2.0 * in.sigma * in.sigma));
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double exact_relaxed_robust_error(const BoundInputs& in, NormVariant variant) {
  const BoundTerms t = bound_terms(in);
  const double rho = variant == NormVariant::l1_dual ? t.rho_l1 : t.rho_k_linf;
  return standard_normal_cdf((rho - t.margin) / in.sigma);
}

bool k1_subspace_feasibility(const Vector& x, int y, const Vector& w_hat, const Vector& u,
                             double eps) {
  if (x.size() != w_hat.size() || u.size() != w_hat.size()) {
    throw DimensionMismatch("k1_subspace_feasibility: dimension mismatch");
  }
  const double u_inf = norm_linf(u);
  if (u_inf == 0.0) throw InvalidArgument("k1_subspace_feasibility: u must be nonzero");
  const double margin = static_cast<double>(y) * dot(x, w_hat);
  return margin - eps * std::abs(dot(u, w_hat)) / u_inf <= 0.0;
}

std::string to_string(McSolver solver) {
  switch (solver) {
    case McSolver::relaxed_closed_form:
      return "relaxed_closed_form";
    case McSolver::k1_exact:
      return "k1_exact";
    case McSolver::optimizer:
      return "optimizer";
  }
  return "unknown";
}

McSolver mc_solver_from_string(const std::string& name) {
  for (auto s : {McSolver::relaxed_closed_form, McSolver::k1_exact, McSolver::optimizer}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidArgument("unknown Monte Carlo solver '" + name + "'");
}

MonteCarloEstimate monte_carlo_robust_error(const BoundInputs& in, std::size_t n, SeededRng& rng,
                                            McSolver solver, const AttackConfig& attack) {
  if (n < 1) throw InvalidArgument("monte_carlo_robust_error: n must be >= 1");
  const BoundTerms t = bound_terms(in);
  if (solver == McSolver::k1_exact && in.k() != 1) {
    throw InvalidArgument("k1_exact solver requires k = 1, got k = " + std::to_string(in.k()));
  }

  const std::size_t d = in.dim();
  const Vector u0 = in.basis.column(0);
  const LinearModel model(in.w_hat);
  // The relaxed set bounds every coordinate of delta' by ||U||_{inf,1} eps,
  // so this box never binds before the l_inf budget does.
  const double reach = t.norm_inf1 * in.eps * (1.0 + 1e-9) + 1e-12;
  const TransformSpec spec = TransformSpec::subspace(in.basis, {-reach, reach}, in.eps);

  MonteCarloEstimate est;
  est.solver = solver;
  est.n = n;
  est.seed = rng.seed();
  Vector x(d);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.uniform() < 0.5 ? 1 : -1;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = static_cast<double>(y) * in.theta_star[j] + in.sigma * rng.normal();
    }
    bool hit = false;
    switch (solver) {
      case McSolver::relaxed_closed_form:
        hit = static_cast<double>(y) * dot(x, in.w_hat) <= t.rho_l1;
        break;
      case McSolver::k1_exact:
        hit = k1_subspace_feasibility(x, y, in.w_hat, u0, in.eps);
        break;
      case McSolver::optimizer: {
        const std::size_t idx = label_to_index(y);
        hit = model.predict(x) != idx || semantic_attack(model, spec, x, idx, attack).success;
        break;
      }
    }
    if (hit) ++est.hits;
  }
  const auto nn = static_cast<double>(n);
  est.estimate = static_cast<double>(est.hits) / nn;
  est.standard_error = std::sqrt(est.estimate * (1.0 - est.estimate) / nn);
  return est;
}

BoundReport make_bound_report(const BoundInputs& in) {
  BoundReport r;
  r.terms = bound_terms(in);
  r.d = in.dim();
  r.k = in.k();
  r.eps = in.eps;
  r.sigma = in.sigma;
  r.precondition_rhs = r.terms.rho_k_linf;
  r.precondition_ok = r.terms.margin >= r.terms.rho_k_linf;
  if (r.precondition_ok) r.bound = robust_error_bound(in);
  r.exact_relaxed_error = exact_relaxed_robust_error(in, NormVariant::k_linf);
  r.exact_relaxed_error_l1 = exact_relaxed_robust_error(in, NormVariant::l1_dual);
  return r;
}

Json BoundReport::to_json() const {
  Json doc;
  doc["d"] = d;
  doc["k"] = k;
  doc["eps"] = eps;
  doc["sigma"] = sigma;
  doc["margin"] = terms.margin;
  doc["norm_inf1"] = terms.norm_inf1;
  doc["norm_inf1_exact"] = terms.norm_exact;
  doc["wbar_inf"] = terms.wbar_inf;
  doc["wbar_one"] = terms.wbar_one;
  doc["rho_l1_dual"] = terms.rho_l1;
  doc["rho_k_linf"] = terms.rho_k_linf;
  doc["precondition_ok"] = precondition_ok;
  doc["precondition_rhs"] = precondition_rhs;
  if (bound) {
    doc["bound"] = *bound;
  } else {
    doc["bound"] = nullptr;
    doc["status"] = "precondition failed; no bound";
  }
  doc["exact_relaxed_error"] = exact_relaxed_error;
  doc["exact_relaxed_error_l1_dual"] = exact_relaxed_error_l1;
  Json mc_list = Json::array();
  for (const auto& m : mc) {
    mc_list.push_back({{"solver", semattack::to_string(m.solver)},
                       {"n", m.n},
                       {"hits", m.hits},
                       {"estimate", m.estimate},
                       {"standard_error", m.standard_error},
                       {"seed", m.seed}});
  }
  doc["mc"] = mc_list;
  return doc;
}

}  // namespace semattack
