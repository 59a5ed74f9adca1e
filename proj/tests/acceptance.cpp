// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Detail lines are indented.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "semattack/error.hpp"
#include "semattack/experiments.hpp"

namespace fs = std::filesystem;
using namespace semattack;

namespace {

constexpr double kBand = 0.02;

int g_failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void detail(const std::string& line) { std::printf("  %s\n", line.c_str()); }

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector gaussian(std::size_t n, SeededRng& rng, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

Vector unit(Vector v) {
  v *= 1.0 / norm_l2(v);
  return v;
}

Matrix as_column(const Vector& v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max({norm_l2(a), norm_l2(b), 1e-8});
  return norm_l2(a - b) / scale;
}

Vector central_difference(const std::function<double(const Vector&)>& f, Vector at,
                          double h = 1e-6) {
  Vector g(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = at[i];
    at[i] = orig + h;
    const double up = f(at);
    at[i] = orig - h;
    const double down = f(at);
    at[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------

struct Benchmark {
  ExperimentConfig cfg;
  Dataset data;
  TrainedModel model;
};

void criterion1(Benchmark& b) {
  const auto t0 = std::chrono::steady_clock::now();
  b.data = make_dataset(b.cfg.data);
  b.model = make_model(b.cfg.model, b.data);
  const double elapsed = seconds_since(t0);
  detail("test accuracy " + num(b.model.test_accuracy, 6) + ", data + training " + num(elapsed, 3) +
         " s");
  verdict(1, b.model.test_accuracy >= 0.99 && elapsed < 30.0,
          "default MLP test accuracy >= 0.99 within 30 s");
}

void criterion2(const Benchmark& b) {
  const auto t0 = std::chrono::steady_clock::now();
  const SweepReport report = run_dimensionality_sweep(b.cfg, *b.model.model, b.data);
  const double elapsed = seconds_since(t0);
  for (const auto& r : report.rows) {
    detail(to_string(r.kind) + (r.rectified ? "+relu" : "") + " k=" + std::to_string(r.k) +
           " attacked accuracy " + num(r.attacked_accuracy));
  }
  const auto fails = check_sweep(report, kBand);
  for (const auto& f : fails) detail("violation: " + f);
  detail("sweep runtime " + num(elapsed, 3) + " s");
  verdict(2, fails.empty() && elapsed < 600.0,
          "sweep monotone in k, additive <= multiplicative, rectified >= plain (2% band)");
}

void criteria3and4(const Benchmark& b) {
  const CompareReport report = run_attack_comparison(b.cfg, *b.model.model, b.data);
  detail("derived eps " + num(report.eps));
  auto find = [&](const std::string& name) -> const CompareRow& {
    for (const auto& r : report.rows) {
      if (r.attack == name) return r;
    }
    throw Error("missing compare row " + name);
  };
  const CompareRow& fgsm = find("fgsm");
  const CompareRow& pgd = find("pgd");
  const CompareRow& cw = find("cw_linf");
  const CompareRow& spatial = find("spatial");
  for (const auto& r : report.rows) {
    detail(r.attack + " " + r.transform + " k=" + std::to_string(r.k) + " clean " +
           num(r.clean_accuracy) + " attacked " + num(r.attacked_accuracy));
  }

  bool ok3 = cw.attacked_accuracy <= pgd.attacked_accuracy + kBand &&
             pgd.attacked_accuracy <= fgsm.attacked_accuracy + kBand &&
             spatial.attacked_accuracy < spatial.clean_accuracy;
  std::vector<const CompareRow*> semantic, random;
  for (const auto& r : report.rows) {
    if (r.attack == "semantic") semantic.push_back(&r);
    if (r.attack.rfind("worst_of_", 0) == 0) {
      random.push_back(&r);
      ok3 = ok3 && r.attacked_accuracy < r.clean_accuracy;
    }
  }
  verdict(3, ok3, "cw_linf <= pgd <= fgsm (2% band); spatial and worst-of-10 below clean");

  std::size_t exceptions = 0;
  for (std::size_t i = 0; i < semantic.size() && i < random.size(); ++i) {
    if (semantic[i]->attacked_accuracy > random[i]->attacked_accuracy) ++exceptions;
  }
  detail(std::to_string(exceptions) + " of " + std::to_string(semantic.size()) +
         " configurations where sampling beats optimization");
  verdict(4, !semantic.empty() && semantic.size() == random.size() && exceptions <= 1,
          "semantic attack <= worst-of-10 per configuration, at most one exception");
}

BoundInputs random_bound_inputs(SeededRng& rng) {
  const std::size_t d = 2 + rng.uniform_index(5);
  const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(d, 4));
  BoundInputs in;
  in.w_hat = unit(gaussian(d, rng));
  in.basis = random_orthonormal(d, k, rng);
  in.sigma = rng.uniform(0.2, 2.0);
  in.eps = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 0.4);
  in.theta_star = in.w_hat;
  const double needed = bound_terms(in).rho_k_linf;
  // Margin along w_hat clears the precondition; the rest of theta_star is
  // orthogonal to w_hat and does not affect the margin.
  Vector off = gaussian(d, rng, 0.5);
  off -= dot(off, in.w_hat) * in.w_hat;
  in.theta_star = (needed + rng.uniform(0.0, 2.5)) * in.w_hat + off;
  return in;
}

void criterion5() {
  const std::size_t cases = 1000;
  const std::size_t n = 100000;
  SeededRng setup(505);
  std::size_t mc_violations = 0, bound_violations = 0;
  double worst_gap = -1.0;
  for (std::size_t c = 0; c < cases; ++c) {
    const BoundInputs in = random_bound_inputs(setup);
    if (!precondition_holds(in)) {
      ++bound_violations;
      continue;
    }
    const double exact = exact_relaxed_robust_error(in, NormVariant::k_linf);
    const double bound = robust_error_bound(in);
    SeededRng rng(mix_seed(5005, c));
    const McSolver solver = in.k() == 1 ? McSolver::k1_exact : McSolver::relaxed_closed_form;
    const MonteCarloEstimate mc = monte_carlo_robust_error(in, n, rng, solver);
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n));
    if (mc.estimate > exact + 3.0 * se) ++mc_violations;
    if (exact > bound + 1e-12) ++bound_violations;
    if (se > 0) worst_gap = std::max(worst_gap, (mc.estimate - exact) / se);
  }
  detail(std::to_string(cases) + " inputs, n = " + std::to_string(n) +
         "; largest (mc - exact) / SE = " + num(worst_gap, 3));
  detail("mc violations " + std::to_string(mc_violations) + ", bound violations " +
         std::to_string(bound_violations));
  verdict(5, mc_violations == 0 && bound_violations == 0,
          "Monte Carlo <= exact relaxed + 3 SE and exact relaxed <= bound + 1e-12");
}

void criterion6() {
  SeededRng rng(606);
  const std::size_t triples = 100;
  std::size_t failures = 0;
  double worst_delta = 0.0, worst_x = 0.0;
  const std::vector<std::size_t> dims{4, 9, 16};
  for (std::size_t t = 0; t < triples; ++t) {
    const std::size_t d = dims[t % dims.size()];
    std::unique_ptr<Classifier> model;
    if (t % 2 == 0) {
      model = std::make_unique<LinearModel>(gaussian(d, rng));
    } else {
      TwoLayerMlp mlp = TwoLayerMlp::initialize(d, 12, rng);
      std::vector<double> p = mlp.parameters();
      for (double& v : p) v += 0.05 * rng.normal();
      mlp.set_parameters(p);
      model = std::make_unique<TwoLayerMlp>(std::move(mlp));
    }
    const std::size_t k = 1 + rng.uniform_index(d);
    const bool rectified = rng.uniform() < 0.5;
    TransformSpec spec;
    Vector delta;
    switch (t % 3) {
      case 0:
        spec = TransformSpec::pixel({}, std::nullopt, rectified);
        delta = gaussian(d, rng, 0.3);
        break;
      case 1:
        spec = TransformSpec::subspace(nested_basis(d, k, t), {}, std::nullopt, rectified);
        delta = gaussian(k, rng);
        break;
      default:
        spec = TransformSpec::multiplicative(nested_basis(d, k, t), {}, std::nullopt, rectified);
        delta = Vector(k, 1.0) + gaussian(k, rng, 0.5);
        break;
    }
    const Vector x = gaussian(d, rng);
    const LossKind loss = (t / 3) % 2 == 0 ? LossKind::cross_entropy : LossKind::cw;
    const std::size_t idx = rng.uniform_index(2);

    auto objective = [&](const Vector& z) { return attack_objective(loss, model->logits(z), idx); };
    const Vector x_tilde = transform_forward(spec, x, delta);
    const Vector upstream = model->input_vjp(
        x_tilde, attack_objective_grad(loss, model->logits(x_tilde), idx));
    const Vector g_delta = transform_vjp(spec, x, delta, upstream);
    const Vector fd_delta = central_difference(
        [&](const Vector& p) { return objective(transform_forward(spec, x, p)); }, delta);
    const Vector g_x = model->input_vjp(x, attack_objective_grad(loss, model->logits(x), idx));
    const Vector fd_x = central_difference(objective, x);

    const double e_delta = relative_error(g_delta, fd_delta);
    const double e_x = relative_error(g_x, fd_x);
    worst_delta = std::max(worst_delta, e_delta);
    worst_x = std::max(worst_x, e_x);
    if (e_delta >= 1e-4 || e_x >= 1e-4) {
      ++failures;
      detail("triple " + std::to_string(t) + " " + to_string(spec.kind) +
             (rectified ? "+relu" : "") + " " + model->kind() + ": delta err " + num(e_delta) +
             ", x err " + num(e_x));
    }
  }
  detail("max relative error: delta " + num(worst_delta, 3) + ", x " + num(worst_x, 3));
  verdict(6, failures == 0,
          std::to_string(triples) + " gradient checks on delta and x below 1e-4 relative error");
}

void criterion7() {
  const std::size_t d = 10;
  const std::size_t trials = 500;
  const double sigma = 0.5;
  SeededRng rng(707);
  AttackConfig attack;  // ADAM lr 0.01, 500 iterations, CW objective
  std::size_t feasible = 0, feasible_hits = 0, infeasible = 0, infeasible_hits = 0;
  std::size_t done = 0;
  while (done < trials) {
    const Vector w_hat = unit(gaussian(d, rng));
    const int y = rng.uniform() < 0.5 ? 1 : -1;
    const Vector x = static_cast<double>(y) * w_hat + gaussian(d, rng, sigma);
    if (y * dot(w_hat, x) <= 0.0) continue;  // clean error, nothing to attack
    const Vector u = unit(rng.uniform(0.0, 8.0) * w_hat + gaussian(d, rng));
    const double eps = 1.0 - rng.uniform();  // (0, 1]
    ++done;

    const bool oracle = k1_subspace_feasibility(x, y, w_hat, u, eps);
    const LinearModel model(w_hat);
    const TransformSpec spec = TransformSpec::subspace(as_column(u), {-10.0, 10.0}, eps);
    const AttackResult r = semantic_attack(model, spec, x, label_to_index(y), attack);
    if (oracle) {
      ++feasible;
      feasible_hits += r.success ? 1 : 0;
    } else {
      ++infeasible;
      infeasible_hits += r.success ? 1 : 0;
    }
  }
  const double rate = feasible == 0 ? 0.0 : static_cast<double>(feasible_hits) / feasible;
  detail("feasible " + std::to_string(feasible) + " (optimizer success " + num(rate) +
         "), infeasible " + std::to_string(infeasible) + " (optimizer success " +
         std::to_string(infeasible_hits) + ")");
  verdict(7, infeasible_hits == 0 && feasible > 0 && rate >= 0.95,
          "k=1 oracle vs optimizer: no success when infeasible, >= 95% when feasible");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion8() {
  const fs::path root = fs::temp_directory_path() / "semattack_acceptance_determinism";
  fs::remove_all(root);
  Json doc = Json::parse(R"({
    "threads": 2,
    "eval_n": 40,
    "data": {"d": 16, "n": 600},
    "model": {"hidden": 16, "epochs": 20, "lr": 0.01},
    "attack": {"max_iter": 100, "transform": {"kind": "subspace_additive", "k": 4, "eps_linf": 0.5}},
    "sweep": {"k": [1, 4, 16]},
    "compare": {"transforms": [
      {"kind": "subspace_additive", "k": 4, "eps_linf": null},
      {"kind": "rank_multiplicative", "k": 16, "eps_linf": 1.0}]},
    "bound": {"k": [1, 2], "eps": [0.0, 0.1], "sigma": [0.5], "mc_n": 5000, "optimizer_n": 50}
  })");
  std::size_t compared = 0, differing = 0;
  for (const auto& cmd : subcommands()) {
    for (const char* side : {"a", "b"}) {
      Json run_doc = doc;
      run_doc["output_dir"] = (root / side).string();
      if (cmd == "report") {
        run_doc["report"]["runs"] = {(root / side / "sweep").string(),
                                     (root / side / "compare").string()};
      }
      std::ostringstream log;
      run_subcommand(cmd, parse_config(run_doc), false, log);
    }
    for (const auto& entry : fs::directory_iterator(root / "a" / cmd)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      const fs::path other = root / "b" / cmd / entry.path().filename();
      if (slurp(entry.path()) != slurp(other)) {
        ++differing;
        detail("differs: " + cmd + "/" + entry.path().filename().string());
      }
    }
  }
  fs::remove_all(root);
  detail(std::to_string(compared) + " CSV files compared across " +
         std::to_string(subcommands().size()) + " subcommands");
  verdict(8, compared > 0 && differing == 0, "repeated runs give byte-identical CSV outputs");
}

void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    detail(std::string("error: ") + e.what());
    verdict(id, false, "raised an exception");
  }
}

}  // namespace

int main() {
  set_warning_sink([](const std::string&) {});
  Benchmark bench;
  bench.cfg = parse_config(Json::object());

  guarded(1, [&] { criterion1(bench); });
  if (bench.model.model) {
    guarded(2, [&] { criterion2(bench); });
    guarded(3, [&] { criteria3and4(bench); });
  } else {
    verdict(2, false, "no trained model");
    verdict(3, false, "no trained model");
    verdict(4, false, "no trained model");
  }
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);

  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
