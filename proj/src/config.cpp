#include "v2x/config.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "v2x/error.hpp"

namespace v2x {

using nlohmann::json;

std::string_view to_string(RewardMode m) {
  return m == RewardMode::OracleArm ? "oracle_arm" : "harq_ack";
}

std::string_view to_string(FeedbackMode m) {
  return m == FeedbackMode::AckNack ? "ack_nack" : "nack_only";
}

namespace {

// Walks one JSON object, reading optional keys and recording type errors and
// unknown keys instead of stopping at the first one.
class ObjectReader {
public:
  ObjectReader(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(fmt::format("{}: expected an object", label()));
  }

  ~ObjectReader() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) errors_.push_back(fmt::format("{}: unknown key", name(key)));
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!type_ok<T>(v)) {
      errors_.push_back(fmt::format("{}: wrong type ({})", name(key), v.type_name()));
      return;
    }
    try {
      out = v.get<T>();
    } catch (const json::exception& e) {
      errors_.push_back(fmt::format("{}: {}", name(key), e.what()));
    }
  }

  /// Sub-object, or nullptr when absent or not an object.
  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  template <typename T>
  static bool type_ok(const json& v) {
    if constexpr (std::is_same_v<T, bool>) return v.is_boolean();
    else if constexpr (std::is_same_v<T, std::string>) return v.is_string();
    else if constexpr (std::is_integral_v<T>) return v.is_number_integer();
    else if constexpr (std::is_floating_point_v<T>) return v.is_number();
    else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!v.is_array()) return false;
      for (const auto& e : v) if (!e.is_number_integer()) return false;
      return true;
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) return false;
      for (const auto& e : v) if (!e.is_number()) return false;
      return true;
    } else {
      return true;
    }
  }

  std::string label() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

int parse_nprb_key(const std::string& key, const std::string& path,
                   std::vector<std::string>& errors) {
  try {
    std::size_t pos = 0;
    const int n = std::stoi(key, &pos);
    if (pos == key.size() && n > 0) return n;
  } catch (const std::exception&) {
  }
  errors.push_back(fmt::format("{}.{}: NPRB keys must be positive integers", path, key));
  return 0;
}

link::TbsTable read_tbs_table(const json& j, std::vector<std::string>& errors) {
  std::map<link::TbsTable::Key, int> bits;
  if (!j.is_object()) {
    errors.push_back("link.tbs_table: expected an object of NPRB -> [bits...]");
    return link::TbsTable(bits);
  }
  for (const auto& [key, row] : j.items()) {
    const int nprb = parse_nprb_key(key, "link.tbs_table", errors);
    if (!row.is_array()) {
      errors.push_back(fmt::format("link.tbs_table.{}: expected an array", key));
      continue;
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (!row[i].is_number_integer()) {
        errors.push_back(fmt::format("link.tbs_table.{}[{}]: expected an integer", key, i));
        continue;
      }
      if (nprb > 0) bits[{nprb, static_cast<int>(i) + 1}] = row[i].get<int>();
    }
  }
  return link::TbsTable(bits);
}

link::BlerModel read_bler(const json& j, std::vector<std::string>& errors) {
  std::map<link::BlerModel::Key, link::BlerCurve> curves;
  if (!j.is_object()) {
    errors.push_back("link.bler: expected an object of NPRB -> {midpoints_db, slopes}");
    return link::BlerModel(curves);
  }
  for (const auto& [key, spec] : j.items()) {
    const int nprb = parse_nprb_key(key, "link.bler", errors);
    ObjectReader r(spec, "link.bler." + key, errors);
    std::vector<double> mids;
    std::vector<double> slopes;
    double slope = std::nan("");
    r.get("midpoints_db", mids);
    r.get("slopes", slopes);
    r.get("slope", slope);
    if (slopes.empty() && !std::isnan(slope)) slopes.assign(mids.size(), slope);
    if (slopes.size() != mids.size()) {
      errors.push_back(fmt::format("link.bler.{}: need one slope per midpoint", key));
      continue;
    }
    if (nprb > 0)
      for (std::size_t i = 0; i < mids.size(); ++i)
        curves[{nprb, static_cast<int>(i) + 1}] = {mids[i], slopes[i]};
  }
  return link::BlerModel(curves);
}

json tbs_table_to_json(const link::TbsTable& t) {
  json out = json::object();
  for (const auto& [key, bits] : t.entries()) out[std::to_string(key.first)].push_back(bits);
  return out;
}

json bler_to_json(const link::BlerModel& m) {
  json out = json::object();
  for (const auto& [key, c] : m.entries()) {
    auto& node = out[std::to_string(key.first)];
    node["midpoints_db"].push_back(c.midpoint_db);
    node["slopes"].push_back(c.slope);
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  {
    ObjectReader top(j, "", errors);
    top.get("seed", c.seed);
    top.get("rounds", c.rounds);
    top.get("n_vehicles", c.n_vehicles);
    top.get("replications", c.replications);

    std::string reward = std::string(to_string(c.reward_mode));
    top.get("reward_mode", reward);
    if (reward == "oracle_arm") c.reward_mode = RewardMode::OracleArm;
    else if (reward == "harq_ack") c.reward_mode = RewardMode::HarqAck;
    else errors.push_back("reward_mode: must be oracle_arm or harq_ack");

    if (const json* fb = top.child("feedback")) {
      ObjectReader r(*fb, "feedback", errors);
      std::string mode = std::string(to_string(c.feedback.mode));
      r.get("mode", mode);
      if (mode == "ack_nack") c.feedback.mode = FeedbackMode::AckNack;
      else if (mode == "nack_only") c.feedback.mode = FeedbackMode::NackOnly;
      else errors.push_back("feedback.mode: must be ack_nack or nack_only");
      r.get("delay", c.feedback.delay);
    }

    if (const json* b = top.child("bandit")) {
      ObjectReader r(*b, "bandit", errors);
      std::string policy = std::string(bandit::to_string(c.bandit.policy.kind));
      r.get("policy", policy);
      try {
        c.bandit.policy.kind = bandit::policy_from_string(policy);
      } catch (const ConfigError& e) {
        errors.push_back(std::string("bandit.policy: ") + e.what());
      }
      r.get("explore_rounds", c.bandit.policy.explore_rounds);
      r.get("epsilon", c.bandit.policy.epsilon);
      r.get("arms", c.bandit.arms);
      r.get("costs", c.bandit.costs);
      r.get("budget", c.bandit.budget);
      r.get("window", c.bandit.window);
      r.get("contextual", c.bandit.contextual);
    }

    if (const json* l = top.child("link")) {
      ObjectReader r(*l, "link", errors);
      r.get("nprb", c.link.nprb);
      if (const json* t = r.child("tbs_table")) c.link.tbs_table = read_tbs_table(*t, errors);
      if (const json* m = r.child("bler")) c.link.bler = read_bler(*m, errors);
      if (const json* s = r.child("snr")) {
        ObjectReader sr(*s, "link.snr", errors);
        sr.get("mean_db", c.link.snr.mean_db);
        sr.get("stddev_db", c.link.snr.stddev_db);
        sr.get("correlation", c.link.snr.correlation);
      }
      r.get("harq_max_transmissions", c.link.harq_max_transmissions);
      r.get("sfs_per_harq", c.link.sfs_per_harq);
    }

    if (const json* s = top.child("sched")) {
      ObjectReader r(*s, "sched", errors);
      r.get("enabled", c.sched.enabled);
      r.get("subchannels", c.sched.subchannels);
      r.get("window_sfs", c.sched.window_sfs);
      r.get("counter_min", c.sched.sps.counter_min);
      r.get("counter_max", c.sched.sps.counter_max);
      r.get("p_keep", c.sched.sps.p_keep);
      r.get("best_fraction", c.sched.sps.best_fraction);
      r.get("interval_sfs", c.sched.sps.interval_sfs);
      r.get("hearing_radius", c.sched.hearing_radius);
    }

    if (const json* b = top.child("behavior")) {
      ObjectReader r(*b, "behavior", errors);
      r.get("catalog", c.behavior.catalog);
      r.get("initial_ids", c.behavior.initial_ids);
      r.get("persistent", c.behavior.persistent);
      r.get("event_rate", c.behavior.event_rate);
      r.get("distribution", c.behavior.distribution);
      r.get("decay_rounds", c.behavior.decay_rounds);
      if (!c.behavior.catalog.empty() && !base_dir.empty()) {
        const std::filesystem::path p(c.behavior.catalog);
        if (p.is_relative()) c.behavior.catalog = (base_dir / p).lexically_normal().string();
      }
    }

    if (const json* s = top.child("sweep")) {
      SweepSpec spec;
      ObjectReader r(*s, "sweep", errors);
      r.get("axis", spec.axis);
      if (const json* v = r.child("values")) {
        if (v->is_array()) spec.values.assign(v->begin(), v->end());
        else errors.push_back("sweep.values: expected an array");
      }
      r.get("replications", spec.replications);
      r.get("blocks_per_point", spec.blocks_per_point);
      r.get("nprbs", spec.nprbs);
      c.sweep = std::move(spec);
    }

    if (const json* rp = top.child("risk_profile")) {
      ObjectReader r(*rp, "risk_profile", errors);
      r.get("mapping", c.risk_profile.mapping);
      r.get("snr_db", c.risk_profile.snr_db);
      r.get("nprbs", c.risk_profile.nprbs);
      r.get("blocks", c.risk_profile.blocks);
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["rounds"] = c.rounds;
  j["n_vehicles"] = c.n_vehicles;
  j["replications"] = c.replications;
  j["reward_mode"] = to_string(c.reward_mode);
  j["feedback"] = {{"mode", to_string(c.feedback.mode)}, {"delay", c.feedback.delay}};
  j["bandit"] = {{"policy", bandit::to_string(c.bandit.policy.kind)},
                 {"explore_rounds", c.bandit.policy.explore_rounds},
                 {"epsilon", c.bandit.policy.epsilon},
                 {"arms", c.bandit.arms},
                 {"costs", c.bandit.costs},
                 {"budget", c.bandit.budget},
                 {"window", c.bandit.window},
                 {"contextual", c.bandit.contextual}};
  j["link"] = {{"nprb", c.link.nprb},
               {"tbs_table", tbs_table_to_json(c.link.tbs_table)},
               {"bler", bler_to_json(c.link.bler)},
               {"snr",
                {{"mean_db", c.link.snr.mean_db},
                 {"stddev_db", c.link.snr.stddev_db},
                 {"correlation", c.link.snr.correlation}}},
               {"harq_max_transmissions", c.link.harq_max_transmissions},
               {"sfs_per_harq", c.link.sfs_per_harq}};
  j["sched"] = {{"enabled", c.sched.enabled},
                {"subchannels", c.sched.subchannels},
                {"window_sfs", c.sched.window_sfs},
                {"counter_min", c.sched.sps.counter_min},
                {"counter_max", c.sched.sps.counter_max},
                {"p_keep", c.sched.sps.p_keep},
                {"best_fraction", c.sched.sps.best_fraction},
                {"interval_sfs", c.sched.sps.interval_sfs},
                {"hearing_radius", c.sched.hearing_radius}};
  j["behavior"] = {{"catalog", c.behavior.catalog},
                   {"initial_ids", c.behavior.initial_ids},
                   {"persistent", c.behavior.persistent},
                   {"event_rate", c.behavior.event_rate},
                   {"distribution", c.behavior.distribution},
                   {"decay_rounds", c.behavior.decay_rounds}};
  if (c.sweep) {
    j["sweep"] = {{"axis", c.sweep->axis},
                  {"values", c.sweep->values},
                  {"replications", c.sweep->replications},
                  {"blocks_per_point", c.sweep->blocks_per_point},
                  {"nprbs", c.sweep->nprbs}};
  }
  j["risk_profile"] = {{"mapping", c.risk_profile.mapping},
                       {"snr_db", c.risk_profile.snr_db},
                       {"nprbs", c.risk_profile.nprbs},
                       {"blocks", c.risk_profile.blocks}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError({fmt::format("{}: {}", path.string(), e.what())});
  }
  return config_from_json(j, path.parent_path());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> v;
  auto check = [&v](bool ok, std::string msg) {
    if (!ok) v.push_back(std::move(msg));
  };

  check(c.rounds >= 1, fmt::format("rounds = {} must be >= 1", c.rounds));
  check(c.n_vehicles >= 1, fmt::format("n_vehicles = {} must be >= 1", c.n_vehicles));
  check(c.replications >= 1, fmt::format("replications = {} must be >= 1", c.replications));
  check(c.feedback.delay >= 0, "feedback.delay must be >= 0");

  // Link tables.
  for (auto& e : c.link.tbs_table.validate()) v.push_back("link.tbs_table: " + e);
  for (auto& e : c.link.bler.validate()) v.push_back("link.bler: " + e);
  const auto table_indices = c.link.tbs_table.indices(c.link.nprb);
  check(!table_indices.empty(),
        fmt::format("link.nprb = {} has no entry in link.tbs_table", c.link.nprb));
  check(c.link.harq_max_transmissions >= 1, "link.harq_max_transmissions must be >= 1");
  check(c.link.sfs_per_harq >= 1, "link.sfs_per_harq must be >= 1");
  check(c.link.snr.correlation >= 0.0 && c.link.snr.correlation < 1.0,
        "link.snr.correlation must lie in [0, 1)");
  check(c.link.snr.stddev_db >= 0.0, "link.snr.stddev_db must be >= 0");

  // Arms against the table.
  const auto& arms = c.bandit.arms;
  const int k = static_cast<int>(arms.size());
  check(k >= 2, "bandit.arms needs at least 2 arms");
  if (!table_indices.empty() && k != static_cast<int>(table_indices.size()))
    v.push_back(fmt::format("bandit.arms has {} arms but link.tbs_table has {} TBS indices for "
                            "NPRB {}",
                            k, table_indices.size(), c.link.nprb));
  std::set<int> distinct(arms.begin(), arms.end());
  check(static_cast<int>(distinct.size()) == k, "bandit.arms must be distinct");
  for (int a : arms) {
    if (a < 1) {
      v.push_back(fmt::format("bandit.arms: index {} must be >= 1", a));
      continue;
    }
    if (!table_indices.empty() && !c.link.tbs_table.contains(c.link.nprb, a))
      v.push_back(fmt::format("bandit.arms: TBS index {} missing from link.tbs_table for NPRB {}", a,
                              c.link.nprb));
    if (!c.link.bler.contains(c.link.nprb, a))
      v.push_back(fmt::format("bandit.arms: TBS index {} missing from link.bler for NPRB {}", a,
                              c.link.nprb));
  }
  if (!c.bandit.costs.empty()) {
    check(static_cast<int>(c.bandit.costs.size()) == k,
          fmt::format("bandit.costs has {} entries but bandit.arms has {}", c.bandit.costs.size(), k));
    for (double cost : c.bandit.costs) check(cost >= 0.0, "bandit.costs must be nonnegative");
  }
  check(c.bandit.budget >= 0.0, "bandit.budget must be >= 0");
  check(c.bandit.window >= 1, "bandit.window must be >= 1");
  check(c.bandit.window <= c.rounds,
        fmt::format("bandit.window = {} exceeds rounds = {}", c.bandit.window, c.rounds));
  if (c.bandit.policy.kind == bandit::PolicyKind::ABTesting)
    check(c.bandit.policy.explore_rounds == 0 || c.bandit.policy.explore_rounds >= k,
          "bandit.explore_rounds must be 0 (meaning 2K) or >= number of arms");
  if (c.bandit.policy.kind == bandit::PolicyKind::EpsilonGreedy)
    check(c.bandit.policy.epsilon > 0.0 && c.bandit.policy.epsilon < 1.0,
          "bandit.epsilon must lie in (0, 1)");
  // Regret is measured against the catalog's TBS index in every reward mode.
  for (int g = 1; g <= risk::kTbsGroups; ++g)
    check(distinct.count(g) != 0,
          fmt::format("bandit.arms must contain TBS index {} used by the behavior catalog", g));

  // Scheduler.
  check(c.sched.subchannels >= 1, "sched.subchannels must be >= 1");
  check(c.sched.window_sfs >= 1, "sched.window_sfs must be >= 1");
  check(c.sched.sps.counter_min >= 1 && c.sched.sps.counter_min <= c.sched.sps.counter_max,
        "sched.counter_min/counter_max must satisfy 1 <= min <= max");
  check(c.sched.sps.p_keep >= 0.0 && c.sched.sps.p_keep <= 1.0, "sched.p_keep must lie in [0, 1]");
  check(c.sched.sps.best_fraction > 0.0 && c.sched.sps.best_fraction <= 1.0,
        "sched.best_fraction must lie in (0, 1]");
  check(c.sched.sps.interval_sfs >= 1, "sched.interval_sfs must be >= 1");

  // Behavior process.
  for (int id : c.behavior.initial_ids)
    check(id >= 1 && id <= risk::kBehaviorCount,
          fmt::format("behavior.initial_ids: unknown behavior id {}", id));
  check(c.behavior.event_rate >= 0.0 && c.behavior.event_rate <= 1.0,
        "behavior.event_rate must lie in [0, 1]");
  if (!c.behavior.distribution.empty()) {
    check(c.behavior.distribution.size() == risk::kBehaviorCount,
          fmt::format("behavior.distribution needs {} entries", risk::kBehaviorCount));
    bool nonneg = true;
    for (double p : c.behavior.distribution) nonneg = nonneg && p >= 0.0;
    check(nonneg, "behavior.distribution entries must be >= 0");
    const double sum =
        std::accumulate(c.behavior.distribution.begin(), c.behavior.distribution.end(), 0.0);
    check(std::abs(sum - 1.0) <= 1e-9, fmt::format("behavior.distribution sums to {}, not 1", sum));
  }

  // Experiments.
  if (c.sweep) {
    const auto& s = *c.sweep;
    const std::set<std::string> axes{"snr_db", "policy", "tbs_index", "nprb"};
    check(axes.count(s.axis) != 0,
          fmt::format("sweep.axis '{}' must be one of snr_db, policy, tbs_index, nprb", s.axis));
    check(!s.values.empty(), "sweep.values must be nonempty");
    for (const auto& val : s.values) {
      if (s.axis == "policy") {
        bool ok = val.is_string();
        if (ok) {
          try {
            bandit::policy_from_string(val.get<std::string>());
          } catch (const ConfigError&) {
            ok = false;
          }
        }
        check(ok, fmt::format("sweep.values: '{}' is not a policy name", val.dump()));
      } else if (s.axis == "snr_db") {
        check(val.is_number(), fmt::format("sweep.values: '{}' is not a number", val.dump()));
      } else if (axes.count(s.axis)) {
        check(val.is_number_integer() && val.get<int>() >= 1,
              fmt::format("sweep.values: '{}' is not a positive integer", val.dump()));
      }
    }
    check(s.replications >= 1, "sweep.replications must be >= 1");
    check(s.blocks_per_point >= 1, "sweep.blocks_per_point must be >= 1");
    for (int n : s.nprbs)
      check(!c.link.tbs_table.indices(n).empty(),
            fmt::format("sweep.nprbs: NPRB {} has no entry in link.tbs_table", n));
  }
  check(c.risk_profile.mapping == "oracle" || c.risk_profile.mapping == "learned",
        "risk_profile.mapping must be oracle or learned");
  check(c.risk_profile.blocks >= 1, "risk_profile.blocks must be >= 1");
  for (int n : c.risk_profile.nprbs) {
    check(!c.link.tbs_table.indices(n).empty(),
          fmt::format("risk_profile.nprbs: NPRB {} has no entry in link.tbs_table", n));
    for (int g = 1; g <= risk::kTbsGroups; ++g)
      check(c.link.bler.contains(n, g) && c.link.tbs_table.contains(n, g),
            fmt::format("risk_profile.nprbs: NPRB {} lacks TBS index {} in link.tbs_table/link.bler",
                        n, g));
  }
  return v;
}

void require_valid(const ExperimentConfig& config) {
  auto v = validate(config);
  if (!v.empty()) throw ValidationError(std::move(v));
}

risk::BehaviorCatalog load_behavior_catalog(const ExperimentConfig& config) {
  if (config.behavior.catalog.empty()) return risk::default_catalog();
  return risk::load_catalog(config.behavior.catalog);
}

std::vector<double> arm_costs(const ExperimentConfig& config) {
  if (!config.bandit.costs.empty()) return config.bandit.costs;
  const double max_bits = config.link.tbs_table.max_bits(config.link.nprb);
  std::vector<double> costs;
  for (int a : config.bandit.arms)
    costs.push_back(config.link.tbs_table.lookup(config.link.nprb, a) / max_bits);
  return costs;
}

}  // namespace v2x
