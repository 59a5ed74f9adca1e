#include "semattack/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "semattack/error.hpp"
#include "semattack/io.hpp"

namespace semattack {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

AttackResult make_result(const Classifier& model, const Vector& x, const Vector& x_adv,
                         std::size_t true_idx, std::size_t clean_label) {
  AttackResult r;
  r.x_adv = x_adv;
  r.linf_distance = linf_distance(x_adv, x);
  r.original_label = true_idx;
  r.clean_label = clean_label;
  r.adversarial_label = model.predict(x_adv);
  r.success = r.adversarial_label != true_idx;
  return r;
}

Vector project_ball(Vector z, const Vector& center, double eps) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = std::clamp(z[i], center[i] - eps, center[i] + eps);
  }
  return z;
}

void check_eps(double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("attack eps must be >= 0");
}

}  // namespace

AffineGrid AffineGrid::standard() {
  AffineGrid g;
  for (int i = 0; i < 31; ++i) g.rotations.push_back(-30.0 + 2.0 * i);
  g.shifts_x = {-2, -1, 0, 1, 2};
  g.shifts_y = {-2, -1, 0, 1, 2};
  return g;
}

AffineGrid AffineGrid::identity_only() { return {{0.0}, {0}, {0}}; }

void AttackConfig::validate() const {
  if (!(lr > 0.0)) throw InvalidArgument("attack lr must be > 0");
  if (max_iter < 1) throw InvalidArgument("attack max_iter must be >= 1");
  if (samples_s < 1) throw InvalidArgument("attack samples_s must be >= 1");
  if (eps_linf) check_eps(*eps_linf);
}

AttackResult semantic_attack(const Classifier& model, const TransformSpec& spec, const Vector& x,
                             std::size_t true_idx, const AttackConfig& cfg) {
  cfg.validate();
  if (!spec.differentiable()) {
    throw UnsupportedTransform("semantic_attack needs a differentiable transform, got " +
                               to_string(spec.kind));
  }
  if (model.input_dim() != x.size()) throw DimensionMismatch("model/input dimension");
  spec.validate(x.size());
  const std::size_t clean_label = model.predict(x);

  Vector delta = project_params(spec, x, spec.identity_params(x.size()));
  if (!is_feasible(spec, x, delta)) {
    AttackResult r = make_result(model, x, x, true_idx, clean_label);
    r.delta_star = delta;
    r.final_loss = attack_objective(cfg.loss, model.logits(x), true_idx);
    return r;
  }

  AdamState adam(delta.size(), cfg.lr);
  std::size_t updates = 0;
  double loss = 0.0;
  Vector x_tilde;
  std::vector<double> trace;
  while (true) {
    x_tilde = transform_forward(spec, x, delta);
    const Vector z = model.logits(x_tilde);
    loss = attack_objective(cfg.loss, z, true_idx);
    trace.push_back(loss);
    if (argmax(z) != true_idx) break;
    if (cfg.loss == LossKind::cw && loss == 0.0) break;
    if (updates >= cfg.max_iter) break;

    const Vector upstream = attack_objective_grad(cfg.loss, z, true_idx);
    const Vector grad_x = model.input_vjp(x_tilde, upstream);
    const Vector grad_delta = transform_vjp(spec, x, delta, grad_x);
    adam_step(adam, delta.span(), grad_delta.span());
    delta = project_params(spec, x, delta);
    ++updates;
  }

  AttackResult r = make_result(model, x, x_tilde, true_idx, clean_label);
  r.delta_star = std::move(delta);
  r.iterations_used = updates;
  r.final_loss = loss;
  r.loss_trace = std::move(trace);
  return r;
}

AttackResult fgsm_attack(const Classifier& model, const Vector& x, std::size_t true_idx,
                         double eps) {
  check_eps(eps);
  const Vector g = input_gradient(model, x, LossKind::cross_entropy, true_idx);
  Vector x_adv = x;
  for (std::size_t i = 0; i < x.size(); ++i) x_adv[i] += eps * sign(g[i]);
  AttackResult r = make_result(model, x, x_adv, true_idx, model.predict(x));
  r.delta_star = x_adv - x;
  r.iterations_used = 1;
  r.final_loss = cross_entropy(model.logits(x_adv), true_idx);
  return r;
}

AttackResult pgd_attack(const Classifier& model, const Vector& x, std::size_t true_idx, double eps,
                        double step, std::size_t iters, SeededRng& rng, bool random_start) {
  check_eps(eps);
  if (!(step >= 0.0)) throw InvalidArgument("pgd step must be >= 0");
  Vector z = x;
  if (random_start) {
    for (double& v : z) v += rng.uniform(-eps, eps);
  }
  std::size_t it = 0;
  for (; it < iters; ++it) {
    if (model.predict(z) != true_idx) break;
    const Vector g = input_gradient(model, z, LossKind::cross_entropy, true_idx);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += step * sign(g[i]);
    z = project_ball(std::move(z), x, eps);
  }
  AttackResult r = make_result(model, x, z, true_idx, model.predict(x));
  r.delta_star = z - x;
  r.iterations_used = it;
  r.final_loss = cross_entropy(model.logits(z), true_idx);
  return r;
}

AttackResult cw_linf_attack(const Classifier& model, const Vector& x, std::size_t true_idx,
                            double eps, double step, std::size_t iters) {
  check_eps(eps);
  if (!(step >= 0.0)) throw InvalidArgument("cw step must be >= 0");
  Vector z = x;
  Vector logits = model.logits(z);
  double loss = cw_attack_loss(logits, true_idx);
  std::vector<double> trace{loss};
  std::size_t it = 0;
  for (; it < iters; ++it) {
    if (argmax(logits) != true_idx || loss == 0.0) break;
    const Vector g = model.input_vjp(z, cw_attack_loss_grad(logits, true_idx));
    Vector candidate = z;
    for (std::size_t i = 0; i < z.size(); ++i) candidate[i] -= step * sign(g[i]);
    candidate = project_ball(std::move(candidate), x, eps);
    const Vector cand_logits = model.logits(candidate);
    const double cand_loss = cw_attack_loss(cand_logits, true_idx);
    if (cand_loss <= loss) {
      z = std::move(candidate);
      logits = cand_logits;
      loss = cand_loss;
      trace.push_back(loss);
    } else {
      step *= 0.5;
    }
  }
  AttackResult r = make_result(model, x, z, true_idx, model.predict(x));
  r.delta_star = z - x;
  r.iterations_used = it;
  r.final_loss = loss;
  r.loss_trace = std::move(trace);
  return r;
}

AttackResult worst_of_s_random(const Classifier& model, const TransformSpec& spec, const Vector& x,
                               std::size_t true_idx, std::size_t s, SeededRng& rng) {
  if (s < 1) throw InvalidArgument("worst_of_s_random: s must be >= 1");
  spec.validate(x.size());
  const std::size_t params = spec.param_count(x.size());
  double best_loss = -std::numeric_limits<double>::infinity();
  Vector best_delta;
  Vector best_x;
  std::vector<double> trace;
  for (std::size_t j = 0; j < s; ++j) {
    Vector delta(params);
    for (double& v : delta) v = rng.uniform(spec.box.low, spec.box.high);
    delta = project_params(spec, x, delta);
    if (!is_feasible(spec, x, delta)) continue;
    Vector x_tilde = transform_forward(spec, x, delta);
    const double loss = cross_entropy(model.logits(x_tilde), true_idx);
    trace.push_back(loss);
    if (loss > best_loss) {
      best_loss = loss;
      best_delta = std::move(delta);
      best_x = std::move(x_tilde);
    }
  }
  const std::size_t clean_label = model.predict(x);
  if (trace.empty()) {
    AttackResult r = make_result(model, x, x, true_idx, clean_label);
    r.delta_star = spec.identity_params(x.size());
    r.final_loss = cross_entropy(model.logits(x), true_idx);
    return r;
  }
  AttackResult r = make_result(model, x, best_x, true_idx, clean_label);
  r.delta_star = std::move(best_delta);
  r.iterations_used = s;
  r.final_loss = best_loss;
  r.loss_trace = std::move(trace);
  return r;
}

AttackResult spatial_grid_attack(const Classifier& model, const Vector& x, std::size_t true_idx,
                                 const AffineGrid& grid) {
  if (grid.size() == 0) throw InvalidArgument("spatial_grid_attack: empty grid");
  const TransformSpec spec = TransformSpec::affine();
  spec.validate(x.size());
  double best_loss = -std::numeric_limits<double>::infinity();
  Vector best_delta;
  Vector best_x;
  std::vector<double> trace;
  trace.reserve(grid.size());
  for (double rot : grid.rotations) {
    for (int sx : grid.shifts_x) {
      for (int sy : grid.shifts_y) {
        Vector delta{rot, static_cast<double>(sx), static_cast<double>(sy)};
        Vector x_tilde = transform_forward(spec, x, delta);
        const double loss = cross_entropy(model.logits(x_tilde), true_idx);
        trace.push_back(loss);
        if (loss > best_loss) {
          best_loss = loss;
          best_delta = std::move(delta);
          best_x = std::move(x_tilde);
        }
      }
    }
  }
  AttackResult r = make_result(model, x, best_x, true_idx, model.predict(x));
  r.delta_star = std::move(best_delta);
  r.iterations_used = grid.size();
  r.final_loss = best_loss;
  r.loss_trace = std::move(trace);
  return r;
}

std::size_t Evaluation::attacked_count() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const AttackResult& r) { return !r.skipped; }));
}

double Evaluation::mean_iterations() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (r.skipped) continue;
    total += static_cast<double>(r.iterations_used);
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double Evaluation::mean_linf_distance() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (r.skipped) continue;
    total += r.linf_distance;
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

Evaluation evaluate_attack(const Classifier& model, const Matrix& X, const std::vector<int>& y,
                           std::span<const std::size_t> rows, const AttackFn& attack,
                           std::size_t threads) {
  Evaluation eval;
  eval.rows.assign(rows.begin(), rows.end());
  eval.results.resize(rows.size());
  if (rows.empty()) {
    warn("evaluate_attack over an empty slice; accuracy reported as 1.0");
    return eval;
  }

  auto run_one = [&](std::size_t j) {
    const Vector x = X.row_vector(rows[j]);
    const std::size_t idx = label_to_index(y[rows[j]]);
    const std::size_t clean = model.predict(x);
    if (clean != idx) {
      AttackResult r = make_result(model, x, x, idx, clean);
      r.skipped = true;
      r.delta_star = Vector();
      eval.results[j] = std::move(r);
      return;
    }
    eval.results[j] = attack(x, idx, rows[j]);
  };

  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, rows.size());
  if (threads <= 1) {
    for (std::size_t j = 0; j < rows.size(); ++j) run_one(j);
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t j = t; j < rows.size(); j += threads) {
          try {
            run_one(j);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t clean_correct = 0;
  std::size_t still_correct = 0;
  for (const auto& r : eval.results) {
    if (!r.skipped) ++clean_correct;
    if (!r.success) ++still_correct;
  }
  const auto n = static_cast<double>(rows.size());
  eval.clean_accuracy = static_cast<double>(clean_correct) / n;
  eval.attacked_accuracy = static_cast<double>(still_correct) / n;
  return eval;
}

void append_results_csv(std::string& out, const std::string& attack, std::size_t k,
                        std::optional<double> eps, const Evaluation& eval,
                        const std::function<std::uint64_t(std::size_t)>& seed_of) {
  for (std::size_t j = 0; j < eval.results.size(); ++j) {
    const AttackResult& r = eval.results[j];
    out += std::to_string(eval.rows[j]);
    out += ',';
    out += attack;
    out += ',';
    out += std::to_string(k);
    out += ',';
    out += eps ? format_double(*eps) : std::string("none");
    out += ',';
    out += std::to_string(index_to_label(r.clean_label));
    out += ',';
    out += std::to_string(index_to_label(r.adversarial_label));
    out += ',';
    out += r.success ? '1' : '0';
    out += ',';
    out += std::to_string(r.iterations_used);
    out += ',';
    out += format_double(r.linf_distance);
    out += ',';
    out += format_double(r.final_loss);
    out += ',';
    out += std::to_string(seed_of(eval.rows[j]));
    out += '\n';
  }
}

}  // namespace semattack
