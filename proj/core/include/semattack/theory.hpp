#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semattack/attacks.hpp"
#include "semattack/io.hpp"
#include "semattack/tensor.hpp"

namespace semattack {

/// Linear classifier sign(<w_hat, x>) against additive attacks x + U delta'
/// with ||U delta'||_inf <= eps, on the two-Gaussian model with means
/// +-theta_star and noise sigma.
struct BoundInputs {
  Vector w_hat;
  Vector theta_star;
  Matrix basis;  // U, d x k with orthonormal columns
  double eps = 0.0;
  double sigma = 1.0;

  std::size_t dim() const noexcept { return w_hat.size(); }
  std::size_t k() const noexcept { return basis.cols(); }
  void validate() const;
};

/// Intermediate quantities of the bound.
struct BoundTerms {
  double margin = 0.0;       // <w_hat, theta_star>
  double norm_inf1 = 0.0;    // ||U||_{inf,1}
  bool norm_exact = true;
  double wbar_inf = 0.0;     // ||w_hat^T U||_inf
  double wbar_one = 0.0;     // ||w_hat^T U||_1
  double rho_l1 = 0.0;       // ||U||_{inf,1} eps ||w_bar||_1
  double rho_k_linf = 0.0;   // k ||U||_{inf,1} eps ||w_bar||_inf
};

BoundTerms bound_terms(const BoundInputs& in);

/// margin >= k ||U||_{inf,1} ||w_hat^T U||_inf eps.
bool precondition_holds(const BoundInputs& in);

/// exp(-(margin - k ||U||_{inf,1} ||w_hat^T U||_inf eps)^2 / (2 sigma^2)).
/// Throws PreconditionFailed (carrying both sides) outside the hypothesis.
double robust_error_bound(const BoundInputs& in);

enum class NormVariant { l1_dual, k_linf };

/// Phi(x) via erfc.
double standard_normal_cdf(double z);

/// P(<y x, w_hat> <= rho) = Phi((rho - margin) / sigma), with rho from the
/// dual-norm step (l1_dual) or its k * l_inf relaxation (k_linf). This is the
/// probability of the relaxed attack set containing a sign flip.
double exact_relaxed_robust_error(const BoundInputs& in, NormVariant variant);

/// Exact feasibility for a single direction u: the best z = c u with
/// ||z||_inf <= eps flips sign(<w_hat, .>) iff
/// <y x, w_hat> - eps |<u, w_hat>| / ||u||_inf <= 0.
bool k1_subspace_feasibility(const Vector& x, int y, const Vector& w_hat, const Vector& u,
                             double eps);

enum class McSolver { relaxed_closed_form, k1_exact, optimizer };

std::string to_string(McSolver solver);
McSolver mc_solver_from_string(const std::string& name);

struct MonteCarloEstimate {
  McSolver solver = McSolver::relaxed_closed_form;
  std::size_t n = 0;
  std::size_t hits = 0;
  double estimate = 0.0;
  double standard_error = 0.0;  // sqrt(p (1 - p) / n)
  std::uint64_t seed = 0;
};

/// Fraction of n samples from the two-component model for which the chosen
/// solver finds an admissible sign flip. `optimizer` runs semantic_attack on
/// the linear model with the given attack settings and is a lower bound on
/// the true robust error; `k1_exact` requires k = 1.
MonteCarloEstimate monte_carlo_robust_error(const BoundInputs& in, std::size_t n, SeededRng& rng,
                                            McSolver solver,
                                            const AttackConfig& attack = AttackConfig{});

/// Everything needed to audit one bound evaluation.
///
/// The exponent uses k ||U||_{inf,1} ||w_hat^T U||_inf (linear in k, not
/// sqrt(k)); the l1_dual variant is reported next to it so the slack of the
/// k * l_inf relaxation is visible.
struct BoundReport {
  std::size_t d = 0;
  std::size_t k = 0;
  double eps = 0.0;
  double sigma = 0.0;
  BoundTerms terms;
  bool precondition_ok = false;
  double precondition_rhs = 0.0;
  std::optional<double> bound;  // absent when the precondition fails
  double exact_relaxed_error = 0.0;     // k_linf variant
  double exact_relaxed_error_l1 = 0.0;  // l1_dual variant
  std::vector<MonteCarloEstimate> mc;

  Json to_json() const;
};

BoundReport make_bound_report(const BoundInputs& in);

}  // namespace semattack
