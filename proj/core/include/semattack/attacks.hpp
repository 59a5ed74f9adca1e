#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semattack/losses.hpp"
#include "semattack/models.hpp"
#include "semattack/transforms.hpp"

namespace semattack {

/// Rotations (degrees) x horizontal shifts x vertical shifts.
struct AffineGrid {
  std::vector<double> rotations;
  std::vector<int> shifts_x;
  std::vector<int> shifts_y;

  /// -30..30 degrees in 31 steps, shifts in {-2, ..., 2}^2.
  static AffineGrid standard();
  static AffineGrid identity_only();
  std::size_t size() const noexcept { return rotations.size() * shifts_x.size() * shifts_y.size(); }
};

struct AttackConfig {
  LossKind loss = LossKind::cw;
  double lr = 0.01;
  std::size_t max_iter = 500;
  std::optional<double> eps_linf;
  std::size_t samples_s = 10;
  std::optional<double> pgd_step;  // defaults to eps / 4
  std::size_t pgd_iters = 40;
  AffineGrid grid = AffineGrid::standard();
  std::uint64_t seed = 0;

  void validate() const;
};

struct AttackResult {
  bool success = false;
  // Input was misclassified before attacking; counted as a success.
  bool skipped = false;
  Vector delta_star;
  Vector x_adv;
  std::size_t iterations_used = 0;
  double linf_distance = 0.0;
  double final_loss = 0.0;
  std::size_t original_label = 0;     // true class index
  std::size_t adversarial_label = 0;  // prediction on x_adv
  std::size_t clean_label = 0;        // prediction on x
  std::vector<double> loss_trace;
};

/// Adversarial parameter optimization: ADAM on the transform parameters,
/// descending the attack objective through f(G(x, delta)) with a projection
/// after every step. Stops at the first misclassified iterate, when the CW
/// objective reaches zero, or after max_iter updates. When the identity
/// parameters are not admissible (e.g. a rank-k projection of x is already
/// outside the l_inf budget) the attack fails without iterating.
AttackResult semantic_attack(const Classifier& model, const TransformSpec& spec, const Vector& x,
                             std::size_t true_idx, const AttackConfig& cfg);

/// x + eps * sign(grad_x cross_entropy).
AttackResult fgsm_attack(const Classifier& model, const Vector& x, std::size_t true_idx,
                         double eps);

/// Projected sign-gradient ascent on cross-entropy inside the l_inf ball,
/// starting from a uniform point in the ball (or x when random_start is
/// false).
AttackResult pgd_attack(const Classifier& model, const Vector& x, std::size_t true_idx, double eps,
                        double step, std::size_t iters, SeededRng& rng, bool random_start = true);

/// Projected sign-gradient descent on the CW hinge inside the l_inf ball.
/// A step is accepted only if it does not increase the hinge; otherwise the
/// step size is halved, so loss_trace is non-increasing.
AttackResult cw_linf_attack(const Classifier& model, const Vector& x, std::size_t true_idx,
                            double eps, double step, std::size_t iters);

/// Draws s parameter vectors uniformly in the box, projects each onto the
/// feasible set and keeps the one with the largest cross-entropy.
/// loss_trace holds the loss of every admissible draw.
AttackResult worst_of_s_random(const Classifier& model, const TransformSpec& spec, const Vector& x,
                               std::size_t true_idx, std::size_t s, SeededRng& rng);

/// Exhaustive search over the affine grid for the largest cross-entropy.
AttackResult spatial_grid_attack(const Classifier& model, const Vector& x, std::size_t true_idx,
                                 const AffineGrid& grid);

/// `sample_index` is the dataset row being attacked.
using AttackFn =
    std::function<AttackResult(const Vector& x, std::size_t true_idx, std::size_t sample_index)>;

struct Evaluation {
  double clean_accuracy = 1.0;
  double attacked_accuracy = 1.0;
  std::vector<std::size_t> rows;
  std::vector<AttackResult> results;

  std::size_t attacked_count() const;
  double mean_iterations() const;
  double mean_linf_distance() const;
};

/// Runs `attack` on every row. Rows misclassified on the clean input are
/// not attacked and count as successes. Samples may run concurrently;
/// results are ordered by row.
Evaluation evaluate_attack(const Classifier& model, const Matrix& X, const std::vector<int>& y,
                           std::span<const std::size_t> rows, const AttackFn& attack,
                           std::size_t threads = 0);

/// Per-sample seed for sample `index` of a run seeded with `seed`.
inline std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
  return mix_seed(seed, index);
}

inline constexpr const char* kResultsCsvHeader =
    "sample_id,attack,k,eps,clean_pred,adv_pred,success,iterations,linf_dist,final_loss,seed";

/// Appends one CSV line per result (no header). Labels are written as +1/-1;
/// `seed_of` maps a dataset row to its per-sample seed.
void append_results_csv(std::string& out, const std::string& attack, std::size_t k,
                        std::optional<double> eps, const Evaluation& eval,
                        const std::function<std::uint64_t(std::size_t)>& seed_of);

}  // namespace semattack
