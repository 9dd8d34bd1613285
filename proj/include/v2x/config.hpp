#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "v2x/bandit.hpp"
#include "v2x/link.hpp"
#include "v2x/risk.hpp"
#include "v2x/sched.hpp"

namespace v2x {

enum class RewardMode { OracleArm, HarqAck };
enum class FeedbackMode { AckNack, NackOnly };

struct BanditConfig {
  bandit::PolicyParams policy;
  std::vector<int> arms{1, 2, 3, 4};  // TBS indices played by arms 1..K
  std::vector<double> costs;          // empty: TBS bits / max TBS bits
  double budget = 100.0;              // C, per window
  int window = 100;                   // W, rounds
  bool contextual = true;             // one posterior set per behavior id

  bool operator==(const BanditConfig&) const = default;
};

struct FeedbackConfig {
  FeedbackMode mode = FeedbackMode::AckNack;
  int delay = 1;  // transmission opportunities
  bool operator==(const FeedbackConfig&) const = default;
};

struct LinkConfig {
  int nprb = 6;
  link::TbsTable tbs_table = link::TbsTable::standard();
  link::BlerModel bler = link::BlerModel::standard();
  link::SnrProcess snr{-2.0, 3.0, 0.9};
  int harq_max_transmissions = 4;
  int sfs_per_harq = 2;

  bool operator==(const LinkConfig&) const = default;
};

struct SchedConfig {
  bool enabled = true;
  int subchannels = 10;
  int window_sfs = 10;
  sched::SpsParams sps;
  int hearing_radius = -1;  // vehicle-id distance; negative: everyone hears everyone

  bool operator==(const SchedConfig&) const = default;
};

struct BehaviorConfig {
  std::string catalog;                // CSV path; empty: built-in catalog
  std::vector<int> initial_ids{1};    // cycled over vehicles
  bool persistent = true;             // initial behavior re-detected every round
  double event_rate = 0.0;            // per-round detection probability
  std::vector<double> distribution;   // over ids 1..13; empty: uniform
  int decay_rounds = 100;

  bool operator==(const BehaviorConfig&) const = default;
};

/// Parameter grid for sweeps. Seeds of replicate r are seed + r.
struct SweepSpec {
  std::string axis = "snr_db";  // snr_db | policy | tbs_index | nprb
  std::vector<nlohmann::json> values;
  int replications = 1;
  std::int64_t blocks_per_point = 10000;
  std::vector<int> nprbs{6, 20};

  bool operator==(const SweepSpec&) const = default;
};

struct RiskProfileConfig {
  std::string mapping = "oracle";  // oracle | learned
  double snr_db = -2.0;
  std::vector<int> nprbs{6, 20};
  std::int64_t blocks = 100000;

  bool operator==(const RiskProfileConfig&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::int64_t rounds = 1000;
  int n_vehicles = 1;
  int replications = 1;
  RewardMode reward_mode = RewardMode::OracleArm;
  FeedbackConfig feedback;
  BanditConfig bandit;
  LinkConfig link;
  SchedConfig sched;
  BehaviorConfig behavior;
  std::optional<SweepSpec> sweep;
  RiskProfileConfig risk_profile;

  bool operator==(const ExperimentConfig&) const = default;
};

std::string_view to_string(RewardMode m);
std::string_view to_string(FeedbackMode m);

/// Every cross-field violation, each naming the offending fields.
std::vector<std::string> validate(const ExperimentConfig& config);

/// Throws ValidationError with every violation found.
void require_valid(const ExperimentConfig& config);

/// Unknown keys and type mismatches are reported together as a
/// ValidationError. Relative catalog paths resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Reads and parses a JSON config (IoError if unreadable, ValidationError if
/// malformed). Does not run validate().
ExperimentConfig load_config(const std::filesystem::path& path);

/// Catalog named by the config, or the built-in one.
risk::BehaviorCatalog load_behavior_catalog(const ExperimentConfig& config);

/// Arm costs: configured ones, or TBS bits over the largest TBS at the NPRB.
std::vector<double> arm_costs(const ExperimentConfig& config);

}  // namespace v2x
