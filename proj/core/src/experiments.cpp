#include "semattack/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "semattack/error.hpp"

#ifndef SEMATTACK_VERSION
#define SEMATTACK_VERSION "0.0.0"
#endif

namespace semattack {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stream_seed(std::uint64_t seed, const std::string& key) {
  return mix_seed(seed, fnv1a(key));
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); }

Json box_json(ParamBox box) { return Json::array({box.low, box.high}); }

ParamBox box_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw InvalidArgument("box must be [low, high]");
  if (!(v[0] <= v[1])) throw InvalidArgument("box low must not exceed high");
  return {v[0], v[1]};
}

std::optional<double> optional_double(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::optional<fs::path> optional_path(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return fs::path(j.get<std::string>());
}

// Matches AffineGrid::standard().
Json standard_grid_json() {
  return {{"rotation_min", -30.0}, {"rotation_max", 30.0}, {"rotation_steps", 31}, {"shift_max", 2}};
}

AffineGrid grid_from_json(const Json& j) {
  const double lo = j.at("rotation_min").get<double>();
  const double hi = j.at("rotation_max").get<double>();
  const auto steps = j.at("rotation_steps").get<std::size_t>();
  const int shift = j.at("shift_max").get<int>();
  if (steps < 1) throw InvalidArgument("grid rotation_steps must be >= 1");
  if (shift < 0) throw InvalidArgument("grid shift_max must be >= 0");
  AffineGrid g;
  for (std::size_t i = 0; i < steps; ++i) {
    g.rotations.push_back(steps == 1 ? lo
                                     : lo + (hi - lo) * static_cast<double>(i) /
                                                static_cast<double>(steps - 1));
  }
  for (int s = -shift; s <= shift; ++s) {
    g.shifts_x.push_back(s);
    g.shifts_y.push_back(s);
  }
  return g;
}

AttackConfig attack_from_json(const Json& j) {
  AttackConfig a;
  a.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  a.lr = j.at("lr").get<double>();
  a.max_iter = j.at("max_iter").get<std::size_t>();
  a.eps_linf = optional_double(j.at("eps_linf"));
  a.samples_s = j.at("samples_s").get<std::size_t>();
  a.pgd_step = optional_double(j.at("pgd_step"));
  a.pgd_iters = j.at("pgd_iters").get<std::size_t>();
  a.grid = grid_from_json(j.at("grid"));
  a.seed = j.at("seed").get<std::uint64_t>();
  return a;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Json default_config() {
  const Json transform = TransformConfig{}.to_json();
  auto variant = [](const char* kind, std::size_t k, bool rectified, Json eps) {
    return Json{{"kind", kind}, {"k", k},     {"rectified", rectified},
                {"box", {-3.0, 3.0}}, {"eps_linf", eps}, {"basis_seed", 3}};
  };
  return {
      {"name", nullptr},
      {"output_dir", "run"},
      {"threads", 0},
      {"eval_n", 500},
      {"assert_band", 0.02},
      {"data",
       {{"d", 100}, {"n", 5000}, {"sigma", 0.5}, {"seed", 1}, {"means", kBuiltinMeans},
        {"path", nullptr}}},
      {"model",
       {{"kind", "mlp"},
        {"hidden", 64},
        {"epochs", 50},
        {"batch_size", kDefaultBatchSize},
        {"lr", 1e-3},
        {"seed", 2},
        {"min_test_accuracy", 0.99},
        {"path", nullptr}}},
      {"attack",
       {{"method", "semantic"},
        {"loss", "cw"},
        {"lr", 0.01},
        {"max_iter", 500},
        {"eps_linf", nullptr},
        {"samples_s", 10},
        {"pgd_step", nullptr},
        {"pgd_iters", 40},
        {"grid", standard_grid_json()},
        {"seed", 4},
        {"transform", transform}}},
      {"sweep",
       {{"k", {1, 2, 5, 10, 20, 50, 100}},
        {"kinds", {"subspace_additive", "rank_multiplicative"}},
        {"rectified", {false, true}},
        {"eps_linf", 1.0},
        {"box", {-3.0, 3.0}},
        {"basis_seed", 3}}},
      {"compare",
       {{"percentile", 0.95},
        {"transforms",
         {variant("subspace_additive", 10, false, nullptr),
          variant("subspace_additive", 10, false, 1.0),
          variant("subspace_additive", 50, false, 1.0),
          variant("subspace_additive", 10, true, 1.0),
          variant("rank_multiplicative", 100, false, 1.0),
          variant("rank_multiplicative", 100, true, 1.0)}}}},
      {"bound",
       {{"d", 10},
        {"theta_norm", 2.0},
        {"theta_seed", 5},
        {"n_fit", 2000},
        {"k", {1, 2, 5}},
        {"eps", {0.0, 0.05, 0.1, 0.2, 0.5}},
        {"sigma", {0.5, 1.0}},
        {"mc_n", 100000},
        {"optimizer_n", 1000},
        {"basis_seed", 3},
        {"seed", 6}}},
      {"report", {{"runs", Json::array()}}},
  };
}

Json merge_config(const Json& base, const Json& overlay) {
  if (!base.is_object() || !overlay.is_object()) return overlay;
  Json out = base;
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    out[it.key()] = out.contains(it.key()) ? merge_config(out[it.key()], it.value()) : it.value();
  }
  return out;
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("override must look like key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw InvalidArgument("empty component in override key '" + key + "'");
    if (!node->is_object()) throw InvalidArgument("override key '" + key + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

std::string config_hash(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

TransformSpec TransformConfig::build(std::size_t d) const {
  TransformSpec spec;
  switch (kind) {
    case TransformKind::pixel_additive:
      return TransformSpec::pixel(box, eps_linf, rectified);
    case TransformKind::affine_spatial:
      return TransformSpec::affine();
    case TransformKind::subspace_additive:
      spec = TransformSpec::subspace(nested_basis(d, k, basis_seed), box, eps_linf, rectified);
      break;
    case TransformKind::rank_multiplicative:
      spec = TransformSpec::multiplicative(nested_basis(d, k, basis_seed), box, eps_linf, rectified);
      break;
  }
  spec.seed = basis_seed;
  return spec;
}

std::string TransformConfig::label() const {
  return to_string(kind) + (rectified ? "+relu" : "");
}

Json TransformConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"k", k},
          {"rectified", rectified},
          {"box", box_json(box)},
          {"eps_linf", eps_linf ? Json(*eps_linf) : Json(nullptr)},
          {"basis_seed", basis_seed}};
}

TransformConfig TransformConfig::from_json(const Json& doc) {
  TransformConfig t;
  t.kind = transform_kind_from_string(doc.at("kind").get<std::string>());
  t.k = doc.value("k", t.k);
  t.rectified = doc.value("rectified", false);
  if (doc.contains("box")) t.box = box_from_json(doc.at("box"));
  if (doc.contains("eps_linf")) t.eps_linf = optional_double(doc.at("eps_linf"));
  t.basis_seed = doc.value("basis_seed", t.basis_seed);
  return t;
}

std::string to_string(AttackMethod method) {
  switch (method) {
    case AttackMethod::semantic:
      return "semantic";
    case AttackMethod::fgsm:
      return "fgsm";
    case AttackMethod::pgd:
      return "pgd";
    case AttackMethod::cw_linf:
      return "cw_linf";
    case AttackMethod::worst_of_s:
      return "worst_of_s";
    case AttackMethod::spatial:
      return "spatial";
  }
  return "unknown";
}

AttackMethod attack_method_from_string(const std::string& name) {
  for (auto m : {AttackMethod::semantic, AttackMethod::fgsm, AttackMethod::pgd,
                 AttackMethod::cw_linf, AttackMethod::worst_of_s, AttackMethod::spatial}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown attack method '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (data.n < 1) throw InvalidArgument("data.n must be >= 1");
  if (!(data.sigma >= 0.0)) throw InvalidArgument("data.sigma must be >= 0");
  if (data.path && !fs::exists(*data.path)) {
    throw IoError("data.path does not exist: " + data.path->string());
  }
  if (model.path && !fs::exists(*model.path)) {
    throw IoError("model.path does not exist: " + model.path->string());
  }
  if (model.kind != "mlp" && model.kind != "linear") {
    throw InvalidArgument("model.kind must be 'mlp' or 'linear'");
  }
  if (model.hidden < 1) throw InvalidArgument("model.hidden must be >= 1");
  if (model.batch_size < 1) throw InvalidArgument("model.batch_size must be >= 1");
  if (!(model.lr > 0.0)) throw InvalidArgument("model.lr must be > 0");
  attack.attack.validate();

  // With data.path the dimension is only known after loading; builds then
  // re-check k against the loaded d.
  const std::size_t d = data.d;
  auto check_k = [&](std::size_t k, TransformKind kind, const std::string& where) {
    if (kind == TransformKind::pixel_additive || kind == TransformKind::affine_spatial) return;
    if (k < 1) throw InvalidArgument(where + ": k must be >= 1");
    if (!data.path && k > d) {
      throw InvalidArgument(where + ": k = " + std::to_string(k) + " exceeds d = " + std::to_string(d));
    }
  };
  check_k(attack.transform.k, attack.transform.kind, "attack.transform");
  for (std::size_t k : sweep.ks) {
    for (TransformKind kind : sweep.kinds) check_k(k, kind, "sweep");
  }
  for (TransformKind kind : sweep.kinds) {
    if (kind != TransformKind::subspace_additive && kind != TransformKind::rank_multiplicative) {
      throw InvalidArgument("sweep.kinds supports subspace_additive and rank_multiplicative");
    }
  }
  if (compare.transforms.empty()) throw InvalidArgument("compare.transforms must not be empty");
  for (const auto& t : compare.transforms) {
    if (t.kind == TransformKind::affine_spatial) {
      throw InvalidArgument("compare.transforms must be differentiable");
    }
    check_k(t.k, t.kind, "compare.transforms");
  }
  if (!(compare.percentile > 0.0 && compare.percentile <= 1.0)) {
    throw InvalidArgument("compare.percentile must lie in (0, 1]");
  }
  if (bound.d < 1) throw InvalidArgument("bound.d must be >= 1");
  for (std::size_t k : bound.ks) {
    if (k < 1 || k > bound.d) throw InvalidArgument("bound.k values must lie in [1, bound.d]");
  }
  for (double e : bound.eps) {
    if (!(e >= 0.0)) throw InvalidArgument("bound.eps values must be >= 0");
  }
  for (double s : bound.sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("bound.sigma values must be > 0");
  }
  if (!(bound.theta_norm > 0.0)) throw InvalidArgument("bound.theta_norm must be > 0");
  if (bound.mc_n < 1) throw InvalidArgument("bound.mc_n must be >= 1");
  if (bound.n_fit < 2) throw InvalidArgument("bound.n_fit must be >= 2");
  for (const auto& run : report_runs) {
    if (!fs::is_directory(run)) throw IoError("report run directory not found: " + run.string());
  }
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.raw = merge_config(default_config(), doc);
  const Json& j = cfg.raw;
  try {
    cfg.name = j.at("name").is_null() ? "" : j.at("name").get<std::string>();
    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.threads = j.at("threads").get<std::size_t>();
    cfg.eval_n = j.at("eval_n").get<std::size_t>();
    cfg.assert_band = j.at("assert_band").get<double>();

    const Json& dj = j.at("data");
    cfg.data.d = dj.at("d").get<std::size_t>();
    cfg.data.n = dj.at("n").get<std::size_t>();
    cfg.data.sigma = dj.at("sigma").get<double>();
    cfg.data.seed = dj.at("seed").get<std::uint64_t>();
    cfg.data.means = dj.at("means").get<std::string>();
    cfg.data.path = optional_path(dj.at("path"));

    const Json& mj = j.at("model");
    cfg.model.kind = mj.at("kind").get<std::string>();
    cfg.model.hidden = mj.at("hidden").get<std::size_t>();
    cfg.model.epochs = mj.at("epochs").get<std::size_t>();
    cfg.model.batch_size = mj.at("batch_size").get<std::size_t>();
    cfg.model.lr = mj.at("lr").get<double>();
    cfg.model.seed = mj.at("seed").get<std::uint64_t>();
    cfg.model.min_test_accuracy = mj.at("min_test_accuracy").get<double>();
    cfg.model.path = optional_path(mj.at("path"));

    const Json& aj = j.at("attack");
    cfg.attack.method = attack_method_from_string(aj.at("method").get<std::string>());
    cfg.attack.attack = attack_from_json(aj);
    cfg.attack.transform = TransformConfig::from_json(aj.at("transform"));

    const Json& sj = j.at("sweep");
    cfg.sweep.ks = sj.at("k").get<std::vector<std::size_t>>();
    cfg.sweep.kinds.clear();
    for (const auto& name : sj.at("kinds").get<std::vector<std::string>>()) {
      cfg.sweep.kinds.push_back(transform_kind_from_string(name));
    }
    cfg.sweep.rectified = sj.at("rectified").get<std::vector<bool>>();
    cfg.sweep.eps_linf = optional_double(sj.at("eps_linf"));
    cfg.sweep.box = box_from_json(sj.at("box"));
    cfg.sweep.basis_seed = sj.at("basis_seed").get<std::uint64_t>();

    const Json& cj = j.at("compare");
    cfg.compare.percentile = cj.at("percentile").get<double>();
    cfg.compare.transforms.clear();
    for (const auto& t : cj.at("transforms")) {
      cfg.compare.transforms.push_back(TransformConfig::from_json(t));
    }

    const Json& bj = j.at("bound");
    cfg.bound.d = bj.at("d").get<std::size_t>();
    cfg.bound.theta_norm = bj.at("theta_norm").get<double>();
    cfg.bound.theta_seed = bj.at("theta_seed").get<std::uint64_t>();
    cfg.bound.n_fit = bj.at("n_fit").get<std::size_t>();
    cfg.bound.ks = bj.at("k").get<std::vector<std::size_t>>();
    cfg.bound.eps = bj.at("eps").get<std::vector<double>>();
    cfg.bound.sigmas = bj.at("sigma").get<std::vector<double>>();
    cfg.bound.mc_n = bj.at("mc_n").get<std::size_t>();
    cfg.bound.optimizer_n = bj.at("optimizer_n").get<std::size_t>();
    cfg.bound.basis_seed = bj.at("basis_seed").get<std::uint64_t>();
    cfg.bound.seed = bj.at("seed").get<std::uint64_t>();

    for (const auto& run : j.at("report").at("runs")) {
      cfg.report_runs.emplace_back(run.get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  Json doc = path.empty() ? Json::object() : read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Building blocks

Dataset make_dataset(const DataConfig& cfg) {
  if (cfg.path) return load_dataset(*cfg.path);
  MixtureSpec spec{load_means(cfg.means, cfg.d), cfg.sigma, default_digit_classes()};
  spec.validate();
  SeededRng rng(cfg.seed);
  return sample_dataset(spec, cfg.n, rng);
}

TrainedModel make_model(const ModelConfig& cfg, const Dataset& data) {
  TrainedModel out;
  if (cfg.path) {
    out.model = load_model(*cfg.path);
    if (out.model->input_dim() != data.dim()) {
      throw DimensionMismatch("model input dimension differs from the data");
    }
  } else if (cfg.kind == "linear") {
    out.model = std::make_unique<LinearModel>(
        LinearModel::fit_mean_difference(data, data.split.train));
  } else {
    SeededRng rng(cfg.seed);
    auto mlp = std::make_unique<TwoLayerMlp>(TwoLayerMlp::initialize(data.dim(), cfg.hidden, rng));
    AdamState adam(mlp->parameter_count(), cfg.lr);
    out.history = train(*mlp, data, cfg.epochs, adam, rng, cfg.batch_size);
    out.model = std::move(mlp);
  }
  out.test_accuracy = accuracy(*out.model, data.X, data.y, data.split.test);
  return out;
}

std::vector<std::size_t> evaluation_rows(const Dataset& data, std::size_t n) {
  const auto& test = data.split.test;
  return {test.begin(), test.begin() + static_cast<std::ptrdiff_t>(std::min(n, test.size()))};
}

AttackFn make_attack(const Classifier& model, const AttackRunConfig& run, std::size_t d,
                     std::uint64_t seed) {
  const AttackConfig cfg = run.attack;
  auto need_eps = [&]() {
    if (!cfg.eps_linf) throw InvalidArgument(to_string(run.method) + " needs attack.eps_linf");
    return *cfg.eps_linf;
  };
  switch (run.method) {
    case AttackMethod::semantic: {
      TransformSpec spec = run.transform.build(d);
      return [&model, spec = std::move(spec), cfg](const Vector& x, std::size_t idx, std::size_t) {
        return semantic_attack(model, spec, x, idx, cfg);
      };
    }
    case AttackMethod::fgsm: {
      const double eps = need_eps();
      return [&model, eps](const Vector& x, std::size_t idx, std::size_t) {
        return fgsm_attack(model, x, idx, eps);
      };
    }
    case AttackMethod::pgd: {
      const double eps = need_eps();
      const double step = cfg.pgd_step.value_or(eps / 4.0);
      return [&model, eps, step, cfg, seed](const Vector& x, std::size_t idx, std::size_t row) {
        SeededRng rng(sample_seed(seed, row));
        return pgd_attack(model, x, idx, eps, step, cfg.pgd_iters, rng);
      };
    }
    case AttackMethod::cw_linf: {
      const double eps = need_eps();
      const double step = cfg.pgd_step.value_or(eps / 4.0);
      return [&model, eps, step, cfg](const Vector& x, std::size_t idx, std::size_t) {
        return cw_linf_attack(model, x, idx, eps, step, cfg.pgd_iters);
      };
    }
    case AttackMethod::worst_of_s: {
      TransformSpec spec = run.transform.build(d);
      return [&model, spec = std::move(spec), cfg, seed](const Vector& x, std::size_t idx,
                                                         std::size_t row) {
        SeededRng rng(sample_seed(seed, row));
        return worst_of_s_random(model, spec, x, idx, cfg.samples_s, rng);
      };
    }
    case AttackMethod::spatial:
      return [&model, cfg](const Vector& x, std::size_t idx, std::size_t) {
        return spatial_grid_attack(model, x, idx, cfg.grid);
      };
  }
  throw InvalidArgument("unknown attack method");
}

// ---------------------------------------------------------------------------
// Experiments

SweepReport run_dimensionality_sweep(const ExperimentConfig& cfg, const Classifier& model,
                                     const Dataset& data) {
  const auto rows = evaluation_rows(data, cfg.eval_n);
  SweepReport report;
  for (TransformKind kind : cfg.sweep.kinds) {
    for (bool rectified : cfg.sweep.rectified) {
      for (std::size_t k : cfg.sweep.ks) {
        if (k < 1) throw InvalidArgument("sweep k must be >= 1");
        if (k > data.dim()) {
          throw InvalidArgument("sweep k = " + std::to_string(k) + " exceeds d = " +
                                std::to_string(data.dim()));
        }
        AttackRunConfig run{AttackMethod::semantic, cfg.attack.attack,
                            TransformConfig{kind, k, rectified, cfg.sweep.box, cfg.sweep.eps_linf,
                                            cfg.sweep.basis_seed}};
        const std::uint64_t seed = cfg.attack.attack.seed;
        const Evaluation eval = evaluate_attack(model, data.X, data.y, rows,
                                                make_attack(model, run, data.dim(), seed),
                                                cfg.threads);
        SweepRow row;
        row.kind = kind;
        row.rectified = rectified;
        row.k = k;
        row.eps = cfg.sweep.eps_linf;
        row.clean_accuracy = eval.clean_accuracy;
        row.attacked_accuracy = eval.attacked_accuracy;
        row.mean_iterations = eval.mean_iterations();
        row.mean_linf = eval.mean_linf_distance();
        row.n_attacked = eval.attacked_count();
        row.seed = cfg.sweep.basis_seed;
        report.rows.push_back(row);
        append_results_csv(report.results_csv, "semantic:" + run.transform.label(), k,
                           cfg.sweep.eps_linf, eval,
                           [seed](std::size_t r) { return sample_seed(seed, r); });
      }
    }
  }
  return report;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty set");
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("percentile q must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

CompareReport run_attack_comparison(const ExperimentConfig& cfg, const Classifier& model,
                                    const Dataset& data) {
  const auto rows = evaluation_rows(data, cfg.eval_n);
  const std::size_t d = data.dim();
  CompareReport report;

  auto record = [&](const std::string& attack, const std::string& transform, std::size_t k,
                    bool rectified, std::optional<double> eps, std::uint64_t seed,
                    const Evaluation& eval) {
    CompareRow row;
    row.attack = attack;
    row.transform = transform;
    row.k = k;
    row.rectified = rectified;
    row.eps = eps;
    row.clean_accuracy = eval.clean_accuracy;
    row.attacked_accuracy = eval.attacked_accuracy;
    row.mean_iterations = eval.mean_iterations();
    row.mean_linf = eval.mean_linf_distance();
    row.n_attacked = eval.attacked_count();
    row.seed = seed;
    report.rows.push_back(row);
    const std::string tag = transform == "-" ? attack : attack + ":" + transform;
    append_results_csv(report.results_csv, tag, k, eps, eval,
                       [seed](std::size_t r) { return sample_seed(seed, r); });
  };
  auto evaluate = [&](const AttackRunConfig& run, std::uint64_t seed) {
    return evaluate_attack(model, data.X, data.y, rows, make_attack(model, run, d, seed),
                           cfg.threads);
  };

  // Semantic and worst-of-s for every transform; the first one sets eps.
  std::vector<std::pair<Evaluation, Evaluation>> per_transform;
  for (const auto& t : cfg.compare.transforms) {
    AttackRunConfig run{AttackMethod::semantic, cfg.attack.attack, t};
    const Evaluation sem = evaluate(run, stream_seed(cfg.attack.attack.seed, "semantic"));
    run.method = AttackMethod::worst_of_s;
    const Evaluation rnd = evaluate(run, stream_seed(cfg.attack.attack.seed, "worst_of_s"));
    per_transform.emplace_back(sem, rnd);
  }

  std::vector<double> distances;
  for (const auto& r : per_transform.front().first.results) {
    if (r.success && !r.skipped) distances.push_back(r.linf_distance);
  }
  if (distances.empty()) {
    throw Error("reference semantic attack produced no successes; cannot derive eps");
  }
  report.eps = percentile(distances, cfg.compare.percentile);

  AttackRunConfig pixel{AttackMethod::fgsm, cfg.attack.attack, TransformConfig{}};
  pixel.attack.eps_linf = report.eps;
  for (AttackMethod m : {AttackMethod::fgsm, AttackMethod::pgd, AttackMethod::cw_linf}) {
    pixel.method = m;
    const std::uint64_t seed = stream_seed(cfg.attack.attack.seed, to_string(m));
    record(to_string(m), "-", d, false, report.eps, seed, evaluate(pixel, seed));
  }
  {
    AttackRunConfig run{AttackMethod::spatial, cfg.attack.attack, TransformConfig{}};
    const std::uint64_t seed = stream_seed(cfg.attack.attack.seed, "spatial");
    record("spatial", "affine_spatial", 3, false, std::nullopt, seed, evaluate(run, seed));
  }
  const std::string worst_name = "worst_of_" + std::to_string(cfg.attack.attack.samples_s);
  for (std::size_t i = 0; i < cfg.compare.transforms.size(); ++i) {
    const auto& t = cfg.compare.transforms[i];
    const std::size_t k = t.kind == TransformKind::pixel_additive ? d : t.k;
    record("semantic", t.label(), k, t.rectified, t.eps_linf,
           stream_seed(cfg.attack.attack.seed, "semantic"), per_transform[i].first);
    record(worst_name, t.label(), k, t.rectified, t.eps_linf,
           stream_seed(cfg.attack.attack.seed, "worst_of_s"), per_transform[i].second);
  }
  return report;
}

std::vector<BoundCell> run_bound_verification(const ExperimentConfig& cfg) {
  const BoundConfig& b = cfg.bound;
  SeededRng theta_rng(b.theta_seed);
  Vector theta = gaussian_vector(Vector(b.d, 0.0), 1.0, theta_rng);
  theta *= b.theta_norm / norm_l2(theta);

  std::vector<BoundCell> cells;
  std::size_t cell_index = 0;
  for (std::size_t si = 0; si < b.sigmas.size(); ++si) {
    const double sigma = b.sigmas[si];
    SeededRng fit_rng(mix_seed(b.seed, si));
    const Dataset fit = sample_two_component(TwoComponentSpec{theta, sigma}, b.n_fit, fit_rng);
    const auto fit_rows = all_rows(fit.size());
    const Vector w_hat = LinearModel::fit_mean_difference(fit, fit_rows).w_hat();

    for (std::size_t k : b.ks) {
      const Matrix basis = nested_basis(b.d, k, b.basis_seed);
      for (double eps : b.eps) {
        const BoundInputs in{w_hat, theta, basis, eps, sigma};
        BoundCell cell;
        cell.report = make_bound_report(in);
        const std::uint64_t cell_seed = mix_seed(b.seed, 1000 + cell_index++);

        SeededRng relaxed_rng(mix_seed(cell_seed, 0));
        cell.report.mc.push_back(
            monte_carlo_robust_error(in, b.mc_n, relaxed_rng, McSolver::relaxed_closed_form));
        if (k == 1) {
          SeededRng k1_rng(mix_seed(cell_seed, 1));
          cell.report.mc.push_back(
              monte_carlo_robust_error(in, b.mc_n, k1_rng, McSolver::k1_exact));
        }
        // The k = 1 oracle is exact; for k >= 2 only the relaxed set is sampled.
        const MonteCarloEstimate primary = cell.report.mc.back();
        if (b.optimizer_n > 0 && eps > 0.0) {
          SeededRng opt_rng(mix_seed(cell_seed, 2));
          cell.optimizer = monte_carlo_robust_error(in, b.optimizer_n, opt_rng,
                                                    McSolver::optimizer, cfg.attack.attack);
          cell.report.mc.push_back(*cell.optimizer);
        }

        if (cell.report.precondition_ok) {
          const double exact = cell.report.exact_relaxed_error;
          const double se =
              std::sqrt(exact * (1.0 - exact) / static_cast<double>(primary.n));
          if (primary.estimate > exact + 3.0 * se) {
            cell.violations.push_back(to_string(primary.solver) + " estimate " +
                                      fmt(primary.estimate) + " > exact " + fmt(exact) +
                                      " + 3 SE");
          }
          if (exact > *cell.report.bound + 1e-12) {
            cell.violations.push_back("exact " + fmt(exact) + " > bound " +
                                      fmt(*cell.report.bound));
          }
        }
        if (cell.optimizer) {
          const double p = cell.report.exact_relaxed_error_l1;
          const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(cell.optimizer->n));
          if (cell.optimizer->estimate > p + 3.0 * se) {
            cell.violations.push_back("optimizer estimate " + fmt(cell.optimizer->estimate) +
                                      " exceeds relaxed-set error " + fmt(p) + " + 3 SE");
          }
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Reports

std::string sweep_csv(const SweepReport& report) {
  std::string out =
      "transform,rectified,k,eps,constraint,clean_accuracy,attacked_accuracy,mean_iterations,"
      "mean_linf,n_attacked,seed\n";
  for (const auto& r : report.rows) {
    out += to_string(r.kind) + ',' + (r.rectified ? "1" : "0") + ',' + std::to_string(r.k) + ',' +
           fmt(r.eps) + ',' + (r.eps ? "box+image_linf" : "box") + ',' + fmt(r.clean_accuracy) +
           ',' + fmt(r.attacked_accuracy) + ',' + fmt(r.mean_iterations) + ',' + fmt(r.mean_linf) +
           ',' + std::to_string(r.n_attacked) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

std::string sweep_long_csv(const SweepReport& report) {
  std::string out = "variant,k,metric,value\n";
  for (const auto& r : report.rows) {
    const std::string variant = to_string(r.kind) + (r.rectified ? "+relu" : "");
    const std::string prefix = variant + ',' + std::to_string(r.k) + ',';
    out += prefix + "clean_accuracy," + fmt(r.clean_accuracy) + '\n';
    out += prefix + "attacked_accuracy," + fmt(r.attacked_accuracy) + '\n';
    out += prefix + "mean_iterations," + fmt(r.mean_iterations) + '\n';
    out += prefix + "mean_linf," + fmt(r.mean_linf) + '\n';
  }
  return out;
}

std::string compare_csv(const CompareReport& report) {
  std::string out =
      "attack,transform,k,eps,clean_accuracy,attacked_accuracy,mean_iterations,mean_linf,"
      "n_attacked,seed\n";
  for (const auto& r : report.rows) {
    out += r.attack + ',' + r.transform + ',' + std::to_string(r.k) + ',' + fmt(r.eps) + ',' +
           fmt(r.clean_accuracy) + ',' + fmt(r.attacked_accuracy) + ',' +
           fmt(r.mean_iterations) + ',' + fmt(r.mean_linf) + ',' + std::to_string(r.n_attacked) +
           ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

std::string bound_csv(const std::vector<BoundCell>& cells) {
  std::string out =
      "d,k,eps,sigma,margin,norm_inf1,wbar_inf,wbar_one,rho_l1_dual,rho_k_linf,precondition_ok,"
      "bound,exact_relaxed_error,exact_relaxed_error_l1_dual,mc_solver,mc_n,mc_estimate,"
      "mc_standard_error,optimizer_n,optimizer_estimate,seed,violations\n";
  for (const auto& c : cells) {
    const BoundReport& r = c.report;
    const MonteCarloEstimate& mc =
        r.k == 1 && r.mc.size() > 1 ? r.mc[1] : r.mc.front();
    out += std::to_string(r.d) + ',' + std::to_string(r.k) + ',' + fmt(r.eps) + ',' +
           fmt(r.sigma) + ',' + fmt(r.terms.margin) + ',' + fmt(r.terms.norm_inf1) + ',' +
           fmt(r.terms.wbar_inf) + ',' + fmt(r.terms.wbar_one) + ',' + fmt(r.terms.rho_l1) + ',' +
           fmt(r.terms.rho_k_linf) + ',' + (r.precondition_ok ? "1" : "0") + ',' +
           (r.bound ? fmt(*r.bound) : std::string("not_covered")) + ',' +
           fmt(r.exact_relaxed_error) + ',' + fmt(r.exact_relaxed_error_l1) + ',' +
           to_string(mc.solver) + ',' + std::to_string(mc.n) + ',' + fmt(mc.estimate) + ',' +
           fmt(mc.standard_error) + ',' +
           (c.optimizer ? std::to_string(c.optimizer->n) : std::string("0")) + ',' +
           (c.optimizer ? fmt(c.optimizer->estimate) : std::string("none")) + ',' +
           std::to_string(mc.seed) + ',' + std::to_string(c.violations.size()) + '\n';
  }
  return out;
}

std::string training_csv(const std::vector<EpochMetrics>& history) {
  std::string out = "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const auto& m : history) {
    out += std::to_string(m.epoch) + ',' + fmt(m.train_loss) + ',' + fmt(m.train_accuracy) + ',' +
           fmt(m.val_loss) + ',' + fmt(m.val_accuracy) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assertions

std::vector<std::string> check_sweep(const SweepReport& report, double band) {
  std::vector<std::string> fails;
  std::map<std::pair<TransformKind, bool>, std::vector<const SweepRow*>> groups;
  for (const auto& r : report.rows) groups[{r.kind, r.rectified}].push_back(&r);
  auto find = [&](TransformKind kind, bool rectified, std::size_t k) -> const SweepRow* {
    auto it = groups.find({kind, rectified});
    if (it == groups.end()) return nullptr;
    for (const SweepRow* r : it->second) {
      if (r->k == k) return r;
    }
    return nullptr;
  };
  auto name = [](const SweepRow& r) {
    return to_string(r.kind) + (r.rectified ? "+relu" : "") + " k=" + std::to_string(r.k);
  };

  for (auto& [key, rows] : groups) {
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->k < b->k; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i]->attacked_accuracy > rows[i - 1]->attacked_accuracy + band) {
        fails.push_back("monotonicity: " + name(*rows[i]) + " accuracy " +
                        fmt(rows[i]->attacked_accuracy) + " > " + name(*rows[i - 1]) + " " +
                        fmt(rows[i - 1]->attacked_accuracy));
      }
    }
  }
  for (const auto& r : report.rows) {
    if (r.kind == TransformKind::subspace_additive) {
      const SweepRow* m = find(TransformKind::rank_multiplicative, r.rectified, r.k);
      if (m && r.attacked_accuracy > m->attacked_accuracy + band) {
        fails.push_back("additive vs multiplicative: " + name(r) + " " +
                        fmt(r.attacked_accuracy) + " > " + name(*m) + " " +
                        fmt(m->attacked_accuracy));
      }
    }
    if (r.rectified) {
      const SweepRow* plain = find(r.kind, false, r.k);
      if (plain && r.attacked_accuracy + band < plain->attacked_accuracy) {
        fails.push_back("rectified vs plain: " + name(r) + " " + fmt(r.attacked_accuracy) +
                        " < " + name(*plain) + " " + fmt(plain->attacked_accuracy));
      }
    }
  }
  return fails;
}

std::vector<std::string> check_compare(const CompareReport& report, double band) {
  std::vector<std::string> fails;
  auto find = [&](const std::string& attack) -> const CompareRow* {
    for (const auto& r : report.rows) {
      if (r.attack == attack) return &r;
    }
    return nullptr;
  };
  const CompareRow* fgsm = find("fgsm");
  const CompareRow* pgd = find("pgd");
  const CompareRow* cw = find("cw_linf");
  const CompareRow* spatial = find("spatial");
  if (cw && pgd && cw->attacked_accuracy > pgd->attacked_accuracy + band) {
    fails.push_back("cw_linf " + fmt(cw->attacked_accuracy) + " > pgd " +
                    fmt(pgd->attacked_accuracy));
  }
  if (pgd && fgsm && pgd->attacked_accuracy > fgsm->attacked_accuracy + band) {
    fails.push_back("pgd " + fmt(pgd->attacked_accuracy) + " > fgsm " +
                    fmt(fgsm->attacked_accuracy));
  }
  if (spatial && !(spatial->attacked_accuracy < spatial->clean_accuracy)) {
    fails.push_back("spatial accuracy " + fmt(spatial->attacked_accuracy) +
                    " not below clean " + fmt(spatial->clean_accuracy));
  }

  std::vector<const CompareRow*> semantic;
  std::vector<const CompareRow*> random;
  for (const auto& r : report.rows) {
    if (r.attack == "semantic") semantic.push_back(&r);
    if (r.attack.rfind("worst_of_", 0) == 0) random.push_back(&r);
  }
  for (const CompareRow* r : random) {
    if (!(r->attacked_accuracy < r->clean_accuracy)) {
      fails.push_back(r->attack + " " + r->transform + " k=" + std::to_string(r->k) + " accuracy " +
                      fmt(r->attacked_accuracy) + " not below clean");
    }
  }
  std::vector<std::string> exceptions;
  for (std::size_t i = 0; i < std::min(semantic.size(), random.size()); ++i) {
    if (semantic[i]->attacked_accuracy > random[i]->attacked_accuracy) {
      exceptions.push_back(semantic[i]->transform + " k=" + std::to_string(semantic[i]->k) +
                           " eps=" + fmt(semantic[i]->eps) + ": semantic " +
                           fmt(semantic[i]->attacked_accuracy) + " > " + random[i]->attack + " " +
                           fmt(random[i]->attacked_accuracy));
    }
  }
  if (exceptions.size() > 1) {
    for (const auto& e : exceptions) fails.push_back("dominance: " + e);
  }
  return fails;
}

std::vector<std::string> check_bound(const std::vector<BoundCell>& cells) {
  std::vector<std::string> fails;
  for (const auto& c : cells) {
    for (const auto& v : c.violations) {
      fails.push_back("k=" + std::to_string(c.report.k) + " eps=" + fmt(c.report.eps) +
                      " sigma=" + fmt(c.report.sigma) + ": " + v);
    }
  }
  return fails;
}

// ---------------------------------------------------------------------------
// Subcommands

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"gen-data", "train",        "attack", "sweep",
                                              "compare",  "verify-bound", "report"};
  return names;
}

fs::path run_directory(const ExperimentConfig& cfg, const std::string& command) {
  return cfg.output_dir / (cfg.name.empty() ? command : cfg.name);
}

namespace {

struct RunContext {
  fs::path dir;
  std::vector<std::string> outputs;
  Json metrics = Json::object();
  std::vector<std::string> violations;

  void write(const std::string& file, const std::string& contents) {
    write_file_atomic(dir / file, contents);
    outputs.push_back(file);
  }
};

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string markdown_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "(empty)\n";
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    out += '|';
    for (const auto& c : r) out += ' ' + c + " |";
    out += '\n';
  };
  line(rows.front());
  out += '|';
  for (std::size_t i = 0; i < rows.front().size(); ++i) out += " --- |";
  out += '\n';
  for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
  return out;
}

std::string summary_csv(const std::string& attack, std::size_t k, const std::string& eps,
                        const Evaluation& eval, std::uint64_t seed) {
  return "attack,k,eps,clean_accuracy,attacked_accuracy,mean_iterations,mean_linf,n_attacked,"
         "seed\n" +
         attack + ',' + std::to_string(k) + ',' + eps + ',' + fmt(eval.clean_accuracy) + ',' +
         fmt(eval.attacked_accuracy) + ',' + fmt(eval.mean_iterations()) + ',' +
         fmt(eval.mean_linf_distance()) + ',' + std::to_string(eval.attacked_count()) + ',' +
         std::to_string(seed) + '\n';
}

TrainedModel prepare_model(const ExperimentConfig& cfg, const Dataset& data, RunContext& ctx,
                           std::ostream& log) {
  TrainedModel tm = make_model(cfg.model, data);
  ctx.metrics["test_accuracy"] = tm.test_accuracy;
  log << "model " << tm.model->kind() << " test accuracy " << fmt(tm.test_accuracy) << '\n';
  return tm;
}

void run_gen_data(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  const Dataset data = make_dataset(cfg.data);
  save_dataset(data, ctx.dir / "dataset.json");
  ctx.outputs.push_back("dataset.json");
  std::string csv = "split,n,n_positive,n_negative,mean_l2_norm\n";
  auto add = [&](const std::string& name, const std::vector<std::size_t>& rows) {
    std::size_t pos = 0;
    double norm_sum = 0.0;
    for (std::size_t r : rows) {
      pos += data.y[r] > 0 ? 1 : 0;
      norm_sum += norm_l2(data.X.row(r));
    }
    const double mean_norm = rows.empty() ? 0.0 : norm_sum / static_cast<double>(rows.size());
    csv += name + ',' + std::to_string(rows.size()) + ',' + std::to_string(pos) + ',' +
           std::to_string(rows.size() - pos) + ',' + fmt(mean_norm) + '\n';
  };
  add("train", data.split.train);
  add("val", data.split.val);
  add("test", data.split.test);
  ctx.write("data_summary.csv", csv);
  log << "sampled " << data.size() << " points in d = " << data.dim() << '\n';
}

void run_train(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  const Dataset data = make_dataset(cfg.data);
  const TrainedModel tm = prepare_model(cfg, data, ctx, log);
  save_model(*tm.model, ctx.dir / "model.json", cfg.raw.at("model"));
  ctx.outputs.push_back("model.json");
  ctx.write("training.csv", training_csv(tm.history));
  if (tm.test_accuracy < cfg.model.min_test_accuracy) {
    ctx.violations.push_back("test accuracy " + fmt(tm.test_accuracy) + " < " +
                             fmt(cfg.model.min_test_accuracy));
  }
}

void run_attack(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  const Dataset data = make_dataset(cfg.data);
  const TrainedModel tm = prepare_model(cfg, data, ctx, log);
  const auto rows = evaluation_rows(data, cfg.eval_n);
  const AttackRunConfig& run = cfg.attack;
  const std::uint64_t seed = run.attack.seed;
  const Evaluation eval = evaluate_attack(*tm.model, data.X, data.y, rows,
                                          make_attack(*tm.model, run, data.dim(), seed),
                                          cfg.threads);
  const bool transformed =
      run.method == AttackMethod::semantic || run.method == AttackMethod::worst_of_s;
  const std::string name =
      transformed ? to_string(run.method) + ":" + run.transform.label() : to_string(run.method);
  const std::size_t k = transformed && run.transform.kind != TransformKind::pixel_additive
                            ? run.transform.k
                            : data.dim();
  std::optional<double> eps;
  if (run.method != AttackMethod::spatial) {
    eps = transformed ? run.transform.eps_linf : run.attack.eps_linf;
  }
  std::string csv = std::string(kResultsCsvHeader) + '\n';
  append_results_csv(csv, name, k, eps, eval, [seed](std::size_t r) { return sample_seed(seed, r); });
  ctx.write("results.csv", csv);
  ctx.write("summary.csv", summary_csv(name, k, fmt(eps), eval, seed));
  ctx.metrics["attacked_accuracy"] = eval.attacked_accuracy;
  log << name << " attacked accuracy " << fmt(eval.attacked_accuracy) << " (clean "
      << fmt(eval.clean_accuracy) << ")\n";
}

void run_sweep(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  const Dataset data = make_dataset(cfg.data);
  const TrainedModel tm = prepare_model(cfg, data, ctx, log);
  const SweepReport report = run_dimensionality_sweep(cfg, *tm.model, data);
  for (const auto& r : report.rows) {
    log << to_string(r.kind) << (r.rectified ? "+relu" : "") << " k=" << r.k
        << " attacked accuracy " << fmt(r.attacked_accuracy) << '\n';
  }
  ctx.write("sweep.csv", sweep_csv(report));
  ctx.write("sweep_long.csv", sweep_long_csv(report));
  ctx.write("results.csv", std::string(kResultsCsvHeader) + '\n' + report.results_csv);
  ctx.violations = check_sweep(report, cfg.assert_band);
}

void run_compare(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  const Dataset data = make_dataset(cfg.data);
  const TrainedModel tm = prepare_model(cfg, data, ctx, log);
  const CompareReport report = run_attack_comparison(cfg, *tm.model, data);
  log << "derived eps " << fmt(report.eps) << '\n';
  for (const auto& r : report.rows) {
    log << r.attack << ' ' << r.transform << " k=" << r.k << " attacked accuracy "
        << fmt(r.attacked_accuracy) << '\n';
  }
  ctx.metrics["eps"] = report.eps;
  ctx.write("compare.csv", compare_csv(report));
  ctx.write("results.csv", std::string(kResultsCsvHeader) + '\n' + report.results_csv);
  ctx.violations = check_compare(report, cfg.assert_band);
}

void run_verify_bound(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  const auto cells = run_bound_verification(cfg);
  Json reports = Json::array();
  for (const auto& c : cells) {
    Json j = c.report.to_json();
    j["violations"] = c.violations;
    reports.push_back(std::move(j));
  }
  ctx.write("bound_report.json", reports.dump(2) + '\n');
  ctx.write("bound.csv", bound_csv(cells));
  ctx.violations = check_bound(cells);
  log << cells.size() << " bound cells, " << ctx.violations.size() << " chain violations\n";
}

void run_report(const ExperimentConfig& cfg, RunContext& ctx, std::ostream& log) {
  static const std::vector<std::string> tables{"training.csv", "summary.csv", "sweep.csv",
                                               "compare.csv", "bound.csv"};
  std::string md =
      "# Report\n\nModels are trained on the train split of a fresh draw of n samples; "
      "attacks run on the first eval_n test rows.\n";
  std::string csv = "run,table,rows,columns\n";
  for (const auto& run : cfg.report_runs) {
    fs::path norm = run.lexically_normal();
    if (norm.filename().empty()) norm = norm.parent_path();
    const std::string label = norm.filename().empty() ? run.string() : norm.filename().string();
    md += "\n## " + label + "\n";
    if (fs::exists(run / "manifest.json")) {
      const Json config = read_json_file(run / "manifest.json").value("config", Json::object());
      if (config.contains("data") && config.contains("eval_n")) {
        md += "\nn = " + config["data"].value("n", Json()).dump() +
              ", eval_n = " + config["eval_n"].dump() + "\n";
      }
    }
    for (const auto& table : tables) {
      const fs::path path = run / table;
      if (!fs::exists(path)) continue;
      const auto rows = read_csv(path);
      md += "\n### " + table + "\n\n" + markdown_table(rows);
      csv += label + ',' + table + ',' +
             std::to_string(rows.empty() ? 0 : rows.size() - 1) + ',' +
             std::to_string(rows.empty() ? 0 : rows.front().size()) + '\n';
    }
  }
  ctx.write("report.md", md);
  ctx.write("report.csv", csv);
  log << "summarized " << cfg.report_runs.size() << " runs\n";
}

}  // namespace

int run_subcommand(const std::string& command, const ExperimentConfig& cfg, bool assert_mode,
                   std::ostream& log) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    throw InvalidArgument("unknown subcommand '" + command + "'");
  }
  RunContext ctx;
  ctx.dir = run_directory(cfg, command);
  fs::create_directories(ctx.dir);

  if (command == "gen-data") {
    run_gen_data(cfg, ctx, log);
  } else if (command == "train") {
    run_train(cfg, ctx, log);
  } else if (command == "attack") {
    run_attack(cfg, ctx, log);
  } else if (command == "sweep") {
    run_sweep(cfg, ctx, log);
  } else if (command == "compare") {
    run_compare(cfg, ctx, log);
  } else if (command == "verify-bound") {
    run_verify_bound(cfg, ctx, log);
  } else {
    run_report(cfg, ctx, log);
  }

  Json manifest{
      {"subcommand", command},
      {"name", cfg.name.empty() ? command : cfg.name},
      {"version", SEMATTACK_VERSION},
      {"created_utc", utc_timestamp()},
      {"config_hash", config_hash(cfg.raw)},
      {"config", cfg.raw},
      {"seeds",
       {{"data", cfg.data.seed},
        {"model", cfg.model.seed},
        {"attack", cfg.attack.attack.seed},
        {"basis", cfg.sweep.basis_seed},
        {"bound", cfg.bound.seed}}},
      {"outputs", ctx.outputs},
      {"metrics", ctx.metrics},
      {"assertions", {{"checked", assert_mode}, {"violations", ctx.violations}}},
  };
  write_file_atomic(ctx.dir / "manifest.json", manifest.dump(2) + '\n');

  for (const auto& v : ctx.violations) log << (assert_mode ? "ASSERTION FAILED: " : "note: ") << v << '\n';
  return assert_mode && !ctx.violations.empty() ? kExitAssertion : kExitOk;
}

}  // namespace semattack
