#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/kernels.hpp"
#include "v2x/risk.hpp"
#include "v2x/sim.hpp"

namespace v2x::experiments {

using Entries = std::vector<std::pair<std::string, double>>;

// ---------------------------------------------------------------------------
// Paired TS vs A/B convergence

struct ConvergenceRow {
  int replicate = 0;
  std::int64_t t = 0;
  int vehicle_id = 0;
  int ts_arm = 0;
  int ab_arm = 0;
  std::int64_t ts_regret_cum = 0;
  std::int64_t ab_regret_cum = 0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<double> ts_regret;       // per replicate, mean over vehicles
  std::vector<double> ab_regret;
  std::vector<std::int64_t> lock_on;   // per replicate and vehicle; rounds + 1 if never
  std::vector<double> late_oracle_frequency;  // TS, rounds after rounds / 3
  std::int64_t rounds = 0;
};

/// Runs TS and A/B on seeds seed + r, r < replications. Needs OracleArm rewards.
ConvergenceResult convergence(const ExperimentConfig& config, int replications,
                              const risk::BehaviorCatalog& catalog,
                              kernels::Backend backend = kernels::Backend::OpenMP);

/// First round from which every decision has zero regret.
std::int64_t lock_on_round(const std::vector<sim::MetricsRow>& rows, int vehicle_id,
                           std::int64_t rounds);

Entries convergence_entries(const ConvergenceResult& r);
void write_convergence_csv(std::ostream& out, const ConvergenceResult& r);

// ---------------------------------------------------------------------------
// Link-level SNR sweep

/// Grid over sweep.nprbs x table indices x sweep.values (default -15..15 dB).
std::vector<kernels::LinkPoint> snr_grid(const ExperimentConfig& config);
std::vector<kernels::LinkCell> sweep_snr(const ExperimentConfig& config,
                                         kernels::Backend backend = kernels::Backend::OpenMP);
void write_sweep_csv(std::ostream& out, const std::vector<kernels::LinkCell>& cells);

// ---------------------------------------------------------------------------
// Per-behavior risk profile

struct RiskRow {
  int behavior_id = 0;
  double weight = 0.0;
  double crash_probability = 0.0;
  int nprb = 0;
  int tbs_index = 0;
  kernels::LinkCell cell;
};

/// TBS index per behavior id under the configured mapping. "learned" runs one
/// persistent vehicle per behavior and takes the arm with the largest
/// posterior mean.
std::vector<int> behavior_mapping(const ExperimentConfig& config,
                                  const risk::BehaviorCatalog& catalog);

std::vector<RiskRow> risk_profile(const ExperimentConfig& config,
                                  const risk::BehaviorCatalog& catalog,
                                  kernels::Backend backend = kernels::Backend::OpenMP);
void write_risk_csv(std::ostream& out, const std::vector<RiskRow>& rows);

// ---------------------------------------------------------------------------
// Episode-level parameter sweep

/// Copy of `config` with the sweep axis set to `value`.
ExperimentConfig apply_axis(const ExperimentConfig& config, const std::string& axis,
                            const nlohmann::json& value);

struct EpisodeSweepRow {
  nlohmann::json value;
  int replicate = 0;
  Entries summary;
};

std::vector<EpisodeSweepRow> episode_sweep(const ExperimentConfig& config,
                                           const risk::BehaviorCatalog& catalog,
                                           kernels::Backend backend = kernels::Backend::OpenMP);
void write_episode_sweep_csv(std::ostream& out, const std::string& axis,
                             const std::vector<EpisodeSweepRow>& rows);

// ---------------------------------------------------------------------------
// Commands: validate, compute, write files under `out_dir`.

struct CommandResult {
  std::vector<std::filesystem::path> files;
  Entries summary;
};

CommandResult cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir);
CommandResult cmd_convergence(const ExperimentConfig& config, const std::filesystem::path& out_dir);
CommandResult cmd_sweep_snr(const ExperimentConfig& config, const std::filesystem::path& out_dir);
CommandResult cmd_risk_profile(const ExperimentConfig& config,
                               const std::filesystem::path& out_dir);

}  // namespace v2x::experiments
