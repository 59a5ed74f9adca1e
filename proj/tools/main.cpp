// semattack <subcommand> --config <path> [--set key=value]... [--assert]

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semattack/error.hpp"
#include "semattack/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  bool assert_mode = false;
};

const char* describe(const std::string& name) {
  if (name == "gen-data") return "Sample the mixture dataset and write dataset.json";
  if (name == "train") return "Train the target model and write model.json";
  if (name == "attack") return "Run one attack over the evaluation slice";
  if (name == "sweep") return "Attack-space dimensionality sweep";
  if (name == "compare") return "Semantic attack vs pixel, spatial and random baselines";
  if (name == "verify-bound") return "Evaluate the robust-error bound against Monte Carlo";
  return "Summarize existing run directories";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic adversarial attacks on parametric transforms"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SEMATTACK_VERSION_STRING);

  Options opts;
  for (const auto& name : semattack::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("-c,--config", opts.config, "JSON config file (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("-s,--set", opts.overrides, "Override a dotted config key: key=value")
        ->allow_extra_args(false);
    sub->add_flag("--assert", opts.assert_mode, "Exit with code 2 when a result assertion fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? semattack::kExitOk : semattack::kExitError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = semattack::load_config(opts.config, opts.overrides);
    const int code = semattack::run_subcommand(command, cfg, opts.assert_mode, std::cerr);
    std::cout << semattack::run_directory(cfg, command).string() << '\n';
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return semattack::kExitError;
  }
}
