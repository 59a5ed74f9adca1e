#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "semattack/attacks.hpp"
#include "semattack/data.hpp"
#include "semattack/io.hpp"
#include "semattack/models.hpp"
#include "semattack/theory.hpp"
#include "semattack/transforms.hpp"

namespace semattack {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Complete default configuration document. User documents are merged over
/// it key by key.
Json default_config();

/// Recursive object merge; non-object values in `overlay` replace the base.
Json merge_config(const Json& base, const Json& overlay);

/// Applies "dotted.key=value". The value is parsed as JSON when possible and
/// taken as a string otherwise. Intermediate objects are created on demand.
void apply_override(Json& config, const std::string& assignment);

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& config);

/// Transform description as it appears in run configs. The basis is
/// regenerated from (d, k, basis_seed).
struct TransformConfig {
  TransformKind kind = TransformKind::subspace_additive;
  std::size_t k = 10;
  bool rectified = false;
  ParamBox box;
  std::optional<double> eps_linf;
  std::uint64_t basis_seed = 3;

  TransformSpec build(std::size_t d) const;
  std::string label() const;
  Json to_json() const;
  static TransformConfig from_json(const Json& doc);
};

struct DataConfig {
  std::size_t d = 100;
  std::size_t n = 5000;
  double sigma = 0.5;
  std::uint64_t seed = 1;
  std::string means = kBuiltinMeans;
  std::optional<std::filesystem::path> path;  // load instead of sampling
};

struct ModelConfig {
  std::string kind = "mlp";  // "mlp" or "linear" (class-mean difference)
  std::size_t hidden = 64;
  std::size_t epochs = 50;
  std::size_t batch_size = kDefaultBatchSize;
  double lr = 1e-3;
  std::uint64_t seed = 2;
  double min_test_accuracy = 0.99;  // checked with --assert
  std::optional<std::filesystem::path> path;  // load instead of training
};

enum class AttackMethod { semantic, fgsm, pgd, cw_linf, worst_of_s, spatial };

std::string to_string(AttackMethod method);
AttackMethod attack_method_from_string(const std::string& name);

struct AttackRunConfig {
  AttackMethod method = AttackMethod::semantic;
  AttackConfig attack;
  TransformConfig transform;
};

struct SweepConfig {
  std::vector<std::size_t> ks{1, 2, 5, 10, 20, 50, 100};
  std::vector<TransformKind> kinds{TransformKind::subspace_additive,
                                   TransformKind::rank_multiplicative};
  std::vector<bool> rectified{false, true};
  std::optional<double> eps_linf = 1.0;
  ParamBox box;
  std::uint64_t basis_seed = 3;
};

struct CompareConfig {
  double percentile = 0.95;
  // The first entry is the reference semantic attack whose l_inf distances
  // set eps for the pixel baselines.
  std::vector<TransformConfig> transforms;
};

struct BoundConfig {
  std::size_t d = 10;
  double theta_norm = 2.0;
  std::uint64_t theta_seed = 5;
  std::size_t n_fit = 2000;
  std::vector<std::size_t> ks{1, 2, 5};
  std::vector<double> eps{0.0, 0.05, 0.1, 0.2, 0.5};
  std::vector<double> sigmas{0.5, 1.0};
  std::size_t mc_n = 100000;
  std::size_t optimizer_n = 1000;
  std::uint64_t basis_seed = 3;
  std::uint64_t seed = 6;
};

struct ExperimentConfig {
  std::string name;  // run directory name; defaults to the subcommand
  std::filesystem::path output_dir = "run";
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::size_t eval_n = 500;
  double assert_band = 0.02;
  DataConfig data;
  ModelConfig model;
  AttackRunConfig attack;
  SweepConfig sweep;
  CompareConfig compare;
  BoundConfig bound;
  std::vector<std::filesystem::path> report_runs;
  Json raw;  // merged document the struct was parsed from

  /// Throws InvalidArgument/IoError on bad values or missing files.
  void validate() const;
};

/// Merges `doc` over the defaults, parses and validates.
ExperimentConfig parse_config(const Json& doc);
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

Dataset make_dataset(const DataConfig& cfg);

struct TrainedModel {
  std::unique_ptr<Classifier> model;
  std::vector<EpochMetrics> history;  // empty when loaded
  double test_accuracy = 0.0;
};

TrainedModel make_model(const ModelConfig& cfg, const Dataset& data);

/// First `n` rows of the test split.
std::vector<std::size_t> evaluation_rows(const Dataset& data, std::size_t n);

/// Attack closure for `run` against `model`; stochastic methods draw from a
/// per-sample generator seeded with sample_seed(seed, sample index).
AttackFn make_attack(const Classifier& model, const AttackRunConfig& run, std::size_t d,
                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct SweepRow {
  TransformKind kind = TransformKind::subspace_additive;
  bool rectified = false;
  std::size_t k = 0;
  std::optional<double> eps;
  double clean_accuracy = 0.0;
  double attacked_accuracy = 0.0;
  double mean_iterations = 0.0;
  double mean_linf = 0.0;
  std::size_t n_attacked = 0;
  std::uint64_t seed = 0;  // basis seed
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::string results_csv;  // per-sample rows, no header
};

SweepReport run_dimensionality_sweep(const ExperimentConfig& cfg, const Classifier& model,
                                     const Dataset& data);

struct CompareRow {
  std::string attack;
  std::string transform;  // "-" for pixel-space baselines
  std::size_t k = 0;
  bool rectified = false;
  std::optional<double> eps;
  double clean_accuracy = 0.0;
  double attacked_accuracy = 0.0;
  double mean_iterations = 0.0;
  double mean_linf = 0.0;
  std::size_t n_attacked = 0;
  std::uint64_t seed = 0;
};

struct CompareReport {
  double eps = 0.0;  // run-derived pixel budget
  std::vector<CompareRow> rows;
  std::string results_csv;
};

CompareReport run_attack_comparison(const ExperimentConfig& cfg, const Classifier& model,
                                    const Dataset& data);

struct BoundCell {
  BoundReport report;
  std::optional<MonteCarloEstimate> optimizer;
  std::vector<std::string> violations;  // chain failures for covered cells
};

std::vector<BoundCell> run_bound_verification(const ExperimentConfig& cfg);

/// Nearest-rank percentile, q in (0, 1]. Throws on empty input.
double percentile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Reports and assertions
// ---------------------------------------------------------------------------

std::string sweep_csv(const SweepReport& report);
std::string sweep_long_csv(const SweepReport& report);
std::string compare_csv(const CompareReport& report);
std::string bound_csv(const std::vector<BoundCell>& cells);
std::string training_csv(const std::vector<EpochMetrics>& history);

/// Each returned string describes one violated assertion.
std::vector<std::string> check_sweep(const SweepReport& report, double band);
std::vector<std::string> check_compare(const CompareReport& report, double band);
std::vector<std::string> check_bound(const std::vector<BoundCell>& cells);

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAssertion = 2;

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its outputs plus manifest.json under
/// output_dir/name. Returns kExitAssertion if `assert_mode` is set and an
/// assertion fails; errors propagate as exceptions.
int run_subcommand(const std::string& command, const ExperimentConfig& cfg, bool assert_mode,
                   std::ostream& log);

std::filesystem::path run_directory(const ExperimentConfig& cfg, const std::string& command);

}  // namespace semattack
