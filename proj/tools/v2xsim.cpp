// v2xsim: run the canned experiments from a JSON config.
//
//   v2xsim run          --config C [--seed N] [--out DIR] [--replications N]
//   v2xsim convergence  ...
//   v2xsim sweep-snr    ...
//   v2xsim risk-profile ...
//   v2xsim validate     --config C
//
// Exit status: 0 ok, 2 invalid config, 3 I/O error, 1 anything else.
// V2X_OUT_DIR overrides the default output directory when --out is absent.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "v2x/config.hpp"
#include "v2x/error.hpp"
#include "v2x/experiments.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::string out;
};

void add_common(CLI::App* cmd, Options& opt, bool outputs) {
  cmd->add_option("--config", opt.config, "experiment config (JSON)")->required();
  if (!outputs) return;
  cmd->add_option("--seed", opt.seed, "override the config seed");
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--replications", opt.replications, "override replications")
      ->check(CLI::PositiveNumber);
}

v2x::ExperimentConfig effective_config(const Options& opt) {
  auto config = v2x::load_config(opt.config);
  if (opt.seed) config.seed = *opt.seed;
  if (opt.replications) {
    config.replications = *opt.replications;
    if (config.sweep) config.sweep->replications = *opt.replications;
  }
  v2x::require_valid(config);
  return config;
}

std::string out_dir(const Options& opt) {
  if (!opt.out.empty()) return opt.out;
  if (const char* env = std::getenv("V2X_OUT_DIR"); env && *env) return env;
  return "out";
}

void report(const v2x::experiments::CommandResult& r) {
  for (const auto& f : r.files) fmt::print("wrote {}\n", f.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bandit-driven TBS selection for sidelink V2X"};
  app.require_subcommand(1);
  Options opt;

  auto* run = app.add_subcommand("run", "simulate an episode; metrics.csv and summary.txt");
  auto* conv = app.add_subcommand("convergence", "paired Thompson sampling vs A/B testing");
  auto* sweep = app.add_subcommand("sweep-snr", "BLER and throughput versus SNR");
  auto* risk = app.add_subcommand("risk-profile", "per-behavior TBS, BLER and throughput");
  auto* check = app.add_subcommand("validate", "check a config and list every violation");
  for (auto* c : {run, conv, sweep, risk}) add_common(c, opt, true);
  add_common(check, opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const auto config = effective_config(opt);
    namespace ex = v2x::experiments;
    if (check->parsed()) {
      v2x::load_behavior_catalog(config);
      fmt::print("{}: ok\n", opt.config);
    } else if (run->parsed()) {
      report(ex::cmd_run(config, out_dir(opt)));
    } else if (conv->parsed()) {
      report(ex::cmd_convergence(config, out_dir(opt)));
    } else if (sweep->parsed()) {
      report(ex::cmd_sweep_snr(config, out_dir(opt)));
    } else if (risk->parsed()) {
      report(ex::cmd_risk_profile(config, out_dir(opt)));
    }
    return 0;
  } catch (const v2x::ValidationError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return 2;
  } catch (const v2x::ConfigError& e) {
    fmt::print(stderr, "invalid config: {}\n", e.what());
    return 2;
  } catch (const v2x::IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
