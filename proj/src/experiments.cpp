#include "v2x/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "v2x/error.hpp"

namespace v2x::experiments {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
}

template <typename Writer>
fs::path write_file(const fs::path& dir, const std::string& name, Writer&& writer) {
  const fs::path path = dir / name;
  auto out = open_output(path);
  writer(out);
  out.flush();
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
  return path;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<std::uint64_t> replicate_seeds(std::uint64_t seed, int n) {
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < n; ++r) seeds.push_back(seed + static_cast<std::uint64_t>(r));
  return seeds;
}

kernels::LinkSweepParams sweep_params(const ExperimentConfig& config, std::int64_t blocks) {
  kernels::LinkSweepParams p;
  p.model = config.link.bler;
  p.table = config.link.tbs_table;
  p.blocks_per_point = blocks;
  p.harq_max_transmissions = config.link.harq_max_transmissions;
  p.sfs_per_harq = config.link.sfs_per_harq;
  p.seed = config.seed;
  return p;
}

void write_schema_line(std::ostream& out) { out << "# schema_version=" << sim::kSchemaVersion << "\n"; }

std::string value_text(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

// ---------------------------------------------------------------------------

std::int64_t lock_on_round(const std::vector<sim::MetricsRow>& rows, int vehicle_id,
                           std::int64_t rounds) {
  std::int64_t last_miss = 0;
  bool seen = false;
  for (const auto& r : rows) {
    if (r.vehicle_id != vehicle_id) continue;
    seen = true;
    if (r.regret_step != 0) last_miss = std::max(last_miss, r.t);
  }
  if (!seen) return rounds + 1;
  return last_miss + 1;
}

ConvergenceResult convergence(const ExperimentConfig& config, int replications,
                              const risk::BehaviorCatalog& catalog, kernels::Backend backend) {
  require_valid(config);
  if (config.reward_mode != RewardMode::OracleArm)
    throw ValidationError({"convergence needs reward_mode = oracle_arm"});
  if (replications < 1) throw ValidationError({"replications must be >= 1"});

  ExperimentConfig ts = config;
  ts.bandit.policy.kind = bandit::PolicyKind::ThompsonSampling;
  ExperimentConfig ab = config;
  ab.bandit.policy.kind = bandit::PolicyKind::ABTesting;

  std::vector<ExperimentConfig> configs;
  std::vector<std::uint64_t> seeds;
  for (auto s : replicate_seeds(config.seed, replications)) {
    configs.push_back(ts);
    seeds.push_back(s);
    configs.push_back(ab);
    seeds.push_back(s);
  }
  const auto logs = kernels::run_episodes(configs, seeds, catalog, backend);

  ConvergenceResult result;
  result.rounds = config.rounds;
  const double vehicles = config.n_vehicles;
  for (int r = 0; r < replications; ++r) {
    const auto& tl = logs[static_cast<std::size_t>(2 * r)];
    const auto& al = logs[static_cast<std::size_t>(2 * r + 1)];
    for (std::size_t i = 0; i < tl.rows.size(); ++i) {
      const auto& a = tl.rows[i];
      const auto& b = al.rows[i];
      result.rows.push_back({r, a.t, a.vehicle_id, a.arm, b.arm, a.regret_cum, b.regret_cum});
    }
    result.ts_regret.push_back(static_cast<double>(tl.summary.cumulative_regret) / vehicles);
    result.ab_regret.push_back(static_cast<double>(al.summary.cumulative_regret) / vehicles);

    std::int64_t late = 0;
    std::int64_t late_hits = 0;
    for (const auto& row : tl.rows) {
      if (row.t <= config.rounds / 3) continue;
      ++late;
      late_hits += row.regret_step == 0 ? 1 : 0;
    }
    result.late_oracle_frequency.push_back(
        late == 0 ? 0.0 : static_cast<double>(late_hits) / static_cast<double>(late));
    for (int v = 1; v <= config.n_vehicles; ++v)
      result.lock_on.push_back(lock_on_round(tl.rows, v, config.rounds));
  }
  return result;
}

Entries convergence_entries(const ConvergenceResult& r) {
  std::size_t wins = 0;
  for (std::size_t i = 0; i < r.ts_regret.size(); ++i) wins += r.ts_regret[i] < r.ab_regret[i];
  std::vector<double> locks(r.lock_on.begin(), r.lock_on.end());
  const double n = static_cast<double>(r.ts_regret.size());
  return {
      {"schema_version", sim::kSchemaVersion},
      {"replications", n},
      {"rounds", static_cast<double>(r.rounds)},
      {"ts_mean_cumulative_regret", mean(r.ts_regret)},
      {"ab_mean_cumulative_regret", mean(r.ab_regret)},
      {"ts_win_fraction", n == 0 ? 0.0 : static_cast<double>(wins) / n},
      {"ts_median_lock_on_round", median(locks)},
      {"ts_late_oracle_frequency", mean(r.late_oracle_frequency)},
  };
}

void write_convergence_csv(std::ostream& out, const ConvergenceResult& r) {
  write_schema_line(out);
  out << "replicate,t,vehicle_id,ts_arm,ab_arm,ts_regret_cum,ab_regret_cum\n";
  for (const auto& row : r.rows)
    out << fmt::format("{},{},{},{},{},{},{}\n", row.replicate, row.t, row.vehicle_id, row.ts_arm,
                       row.ab_arm, row.ts_regret_cum, row.ab_regret_cum);
}

// ---------------------------------------------------------------------------

std::vector<kernels::LinkPoint> snr_grid(const ExperimentConfig& config) {
  SweepSpec spec = config.sweep.value_or(SweepSpec{});
  if (spec.axis != "snr_db")
    throw ValidationError({fmt::format("sweep.axis = '{}' but sweep-snr needs snr_db", spec.axis)});
  if (spec.values.empty())
    for (int s = -15; s <= 15; ++s) spec.values.emplace_back(s);

  std::vector<kernels::LinkPoint> points;
  for (int r = 0; r < spec.replications; ++r)
    for (int nprb : spec.nprbs)
      for (int idx : config.link.tbs_table.indices(nprb))
        for (const auto& v : spec.values)
          points.push_back({nprb, idx, v.get<double>(), static_cast<std::uint64_t>(r)});
  return points;
}

std::vector<kernels::LinkCell> sweep_snr(const ExperimentConfig& config, kernels::Backend backend) {
  require_valid(config);
  const auto points = snr_grid(config);
  const auto blocks = config.sweep ? config.sweep->blocks_per_point : SweepSpec{}.blocks_per_point;
  return kernels::link_sweep(points, sweep_params(config, blocks), backend);
}

void write_sweep_csv(std::ostream& out, const std::vector<kernels::LinkCell>& cells) {
  write_schema_line(out);
  out << "replicate,nprb,tbs_index,tbs_bits,snr_db,blocks,transmissions,errors,bler,bler_analytic,"
         "residual_bler,throughput_normalized,throughput_block_normalized\n";
  for (const auto& c : cells)
    out << fmt::format("{},{},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                       c.point.replicate, c.point.nprb, c.point.tbs_index, c.tbs_bits,
                       c.point.snr_db, c.blocks, c.transmissions, c.errors, c.bler(),
                       c.bler_analytic, c.residual_bler(), c.throughput_normalized(),
                       c.throughput_block_normalized());
}

// ---------------------------------------------------------------------------

std::vector<int> behavior_mapping(const ExperimentConfig& config,
                                  const risk::BehaviorCatalog& catalog) {
  std::vector<int> mapping;
  if (config.risk_profile.mapping == "oracle") {
    for (const auto& e : catalog.entries()) mapping.push_back(e.tbs_index);
    return mapping;
  }

  ExperimentConfig learn = config;
  learn.n_vehicles = catalog.size();
  learn.behavior.initial_ids.clear();
  for (const auto& e : catalog.entries()) learn.behavior.initial_ids.push_back(e.behavior_id);
  learn.behavior.persistent = true;
  learn.behavior.event_rate = 0.0;
  const auto log = sim::run_episode(learn, config.seed, catalog);

  for (const auto& e : catalog.entries()) {
    const int key = config.bandit.contextual ? e.behavior_id : 0;
    const auto& post = log.posteriors.at(e.behavior_id).at(key);
    std::size_t best = 0;
    for (std::size_t k = 1; k < post.size(); ++k)
      if (post[k].mean() > post[best].mean()) best = k;
    mapping.push_back(config.bandit.arms[best]);
  }
  return mapping;
}

std::vector<RiskRow> risk_profile(const ExperimentConfig& config,
                                  const risk::BehaviorCatalog& catalog, kernels::Backend backend) {
  require_valid(config);
  const auto mapping = behavior_mapping(config, catalog);
  const auto curve = risk::fit_curve(catalog);

  // One Monte-Carlo cell per distinct (NPRB, TBS index); behaviors sharing a
  // TBS index see the same channel.
  std::vector<kernels::LinkPoint> points;
  std::map<std::pair<int, int>, std::size_t> slot;
  for (int nprb : config.risk_profile.nprbs)
    for (int idx : mapping)
      if (slot.emplace(std::make_pair(nprb, idx), points.size()).second)
        points.push_back({nprb, idx, config.risk_profile.snr_db, 0});
  const auto cells =
      kernels::link_sweep(points, sweep_params(config, config.risk_profile.blocks), backend);

  std::vector<RiskRow> rows;
  for (int nprb : config.risk_profile.nprbs) {
    for (std::size_t i = 0; i < mapping.size(); ++i) {
      const auto& e = catalog.entries()[i];
      rows.push_back({e.behavior_id, e.weight,
                      risk::crash_probability(curve, static_cast<double>(e.behavior_id)), nprb,
                      mapping[i], cells[slot.at({nprb, mapping[i]})]});
    }
  }
  return rows;
}

void write_risk_csv(std::ostream& out, const std::vector<RiskRow>& rows) {
  write_schema_line(out);
  out << "nprb,behavior_id,weight,crash_probability,tbs_index,tbs_bits,snr_db,blocks,transmissions,"
         "errors,bler,residual_bler,throughput_normalized,throughput_block_normalized\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{},{:.6f},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.nprb,
                       r.behavior_id, r.weight, r.crash_probability, r.tbs_index, r.cell.tbs_bits,
                       r.cell.point.snr_db, r.cell.blocks, r.cell.transmissions, r.cell.errors,
                       r.cell.bler(), r.cell.residual_bler(), r.cell.throughput_normalized(),
                       r.cell.throughput_block_normalized());
}

// ---------------------------------------------------------------------------

ExperimentConfig apply_axis(const ExperimentConfig& config, const std::string& axis,
                            const nlohmann::json& value) {
  ExperimentConfig c = config;
  c.sweep.reset();
  if (axis == "snr_db") {
    c.link.snr.mean_db = value.get<double>();
  } else if (axis == "policy") {
    c.bandit.policy.kind = bandit::policy_from_string(value.get<std::string>());
  } else if (axis == "nprb") {
    c.link.nprb = value.get<int>();
  } else if (axis == "tbs_index") {
    const int idx = value.get<int>();
    const auto& arms = c.bandit.arms;
    auto it = std::find(arms.begin(), arms.end(), idx);
    if (it == arms.end())
      throw ValidationError({fmt::format("sweep.values: TBS index {} is not in bandit.arms", idx)});
    // Pin the arm: it alone costs nothing, and nothing else fits a zero budget.
    c.bandit.costs.assign(arms.size(), 1.0);
    c.bandit.costs[static_cast<std::size_t>(it - arms.begin())] = 0.0;
    c.bandit.budget = 0.0;
  } else {
    throw ValidationError({fmt::format("sweep.axis '{}' is not supported", axis)});
  }
  return c;
}

std::vector<EpisodeSweepRow> episode_sweep(const ExperimentConfig& config,
                                           const risk::BehaviorCatalog& catalog,
                                           kernels::Backend backend) {
  require_valid(config);
  if (!config.sweep) return {};
  const auto& spec = *config.sweep;

  std::vector<ExperimentConfig> configs;
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeSweepRow> rows;
  for (const auto& v : spec.values) {
    const auto c = apply_axis(config, spec.axis, v);
    for (int r = 0; r < spec.replications; ++r) {
      configs.push_back(c);
      seeds.push_back(config.seed + static_cast<std::uint64_t>(r));
      rows.push_back({v, r, {}});
    }
  }
  const auto logs = kernels::run_episodes(configs, seeds, catalog, backend);
  for (std::size_t i = 0; i < logs.size(); ++i) rows[i].summary = sim::summary_entries(logs[i], configs[i]);
  return rows;
}

void write_episode_sweep_csv(std::ostream& out, const std::string& axis,
                             const std::vector<EpisodeSweepRow>& rows) {
  // Per-behavior keys vary with the behaviors seen, so only global ones go in.
  std::vector<std::string> keys;
  if (!rows.empty())
    for (const auto& [k, v] : rows.front().summary)
      if (k.rfind("behavior_", 0) != 0 && k != "schema_version") keys.push_back(k);

  write_schema_line(out);
  out << axis << ",replicate";
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  for (const auto& row : rows) {
    std::map<std::string, double> m(row.summary.begin(), row.summary.end());
    out << value_text(row.value) << ',' << row.replicate;
    for (const auto& k : keys) {
      auto it = m.find(k);
      if (it == m.end())
        out << ',';
      else
        out << fmt::format(",{}", it->second);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

CommandResult cmd_run(const ExperimentConfig& config, const fs::path& out_dir) {
  require_valid(config);
  const auto catalog = load_behavior_catalog(config);
  prepare_dir(out_dir);

  const auto seeds = replicate_seeds(config.seed, config.replications);
  const auto logs = kernels::replicate_episodes(config, seeds, catalog);
  std::vector<EpisodeSweepRow> sweep_rows;
  if (config.sweep) sweep_rows = episode_sweep(config, catalog);

  CommandResult result;
  result.summary = sim::summary_entries(logs.front(), config);
  result.files.push_back(
      write_file(out_dir, "metrics.csv", [&](std::ostream& o) { sim::write_metrics_csv(o, logs.front()); }));
  result.files.push_back(
      write_file(out_dir, "summary.txt", [&](std::ostream& o) { sim::write_summary(o, result.summary); }));
  if (logs.size() > 1) {
    std::vector<EpisodeSweepRow> reps;
    for (std::size_t r = 0; r < logs.size(); ++r)
      reps.push_back({static_cast<std::int64_t>(seeds[r]), static_cast<int>(r),
                      sim::summary_entries(logs[r], config)});
    result.files.push_back(write_file(
        out_dir, "replicates.csv", [&](std::ostream& o) { write_episode_sweep_csv(o, "seed", reps); }));
  }
  if (config.sweep)
    result.files.push_back(write_file(out_dir, "sweep_summary.csv", [&](std::ostream& o) {
      write_episode_sweep_csv(o, config.sweep->axis, sweep_rows);
    }));
  result.files.push_back(write_file(out_dir, "effective_config.json", [&](std::ostream& o) {
    o << config_to_json(config).dump(2) << '\n';
  }));
  return result;
}

CommandResult cmd_convergence(const ExperimentConfig& config, const fs::path& out_dir) {
  require_valid(config);
  const auto catalog = load_behavior_catalog(config);
  prepare_dir(out_dir);
  const auto conv = convergence(config, config.replications, catalog);

  CommandResult result;
  result.summary = convergence_entries(conv);
  result.files.push_back(write_file(out_dir, "convergence.csv",
                                    [&](std::ostream& o) { write_convergence_csv(o, conv); }));
  result.files.push_back(
      write_file(out_dir, "summary.txt", [&](std::ostream& o) { sim::write_summary(o, result.summary); }));
  result.files.push_back(write_file(out_dir, "effective_config.json", [&](std::ostream& o) {
    o << config_to_json(config).dump(2) << '\n';
  }));
  return result;
}

CommandResult cmd_sweep_snr(const ExperimentConfig& config, const fs::path& out_dir) {
  require_valid(config);
  prepare_dir(out_dir);
  const auto cells = sweep_snr(config);

  CommandResult result;
  result.summary = {{"schema_version", sim::kSchemaVersion},
                    {"points", static_cast<double>(cells.size())}};
  result.files.push_back(
      write_file(out_dir, "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, cells); }));
  result.files.push_back(
      write_file(out_dir, "summary.txt", [&](std::ostream& o) { sim::write_summary(o, result.summary); }));
  result.files.push_back(write_file(out_dir, "effective_config.json", [&](std::ostream& o) {
    o << config_to_json(config).dump(2) << '\n';
  }));
  return result;
}

CommandResult cmd_risk_profile(const ExperimentConfig& config, const fs::path& out_dir) {
  require_valid(config);
  const auto catalog = load_behavior_catalog(config);
  prepare_dir(out_dir);
  const auto rows = risk_profile(config, catalog);

  CommandResult result;
  result.summary = {{"schema_version", sim::kSchemaVersion},
                    {"rows", static_cast<double>(rows.size())}};
  for (int nprb : config.risk_profile.nprbs) {
    std::map<int, const RiskRow*> by_group;
    for (const auto& r : rows)
      if (r.nprb == nprb) by_group.emplace(r.tbs_index, &r);
    for (const auto& [idx, r] : by_group) {
      result.summary.emplace_back(fmt::format("nprb_{}_tbs_{}_bler", nprb, idx), r->cell.bler());
      result.summary.emplace_back(fmt::format("nprb_{}_tbs_{}_throughput_normalized", nprb, idx),
                                  r->cell.throughput_normalized());
    }
  }
  result.files.push_back(
      write_file(out_dir, "risk_profile.csv", [&](std::ostream& o) { write_risk_csv(o, rows); }));
  result.files.push_back(
      write_file(out_dir, "summary.txt", [&](std::ostream& o) { sim::write_summary(o, result.summary); }));
  result.files.push_back(write_file(out_dir, "effective_config.json", [&](std::ostream& o) {
    o << config_to_json(config).dump(2) << '\n';
  }));
  return result;
}

}  // namespace v2x::experiments
