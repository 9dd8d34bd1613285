#include "v2x/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>

#include <fmt/format.h>

#include "v2x/error.hpp"
#include "v2x/sched.hpp"

namespace v2x::sim {

std::optional<FeedbackEvent> deliver_feedback(link::Feedback outcome, const FeedbackConfig& cfg,
                                              std::int64_t clock) {
  if (cfg.mode == FeedbackMode::NackOnly && outcome == link::Feedback::Ack) return std::nullopt;
  return FeedbackEvent{clock + cfg.delay, outcome, false};
}

void FeedbackChannel::post(int vehicle_id, int context, bandit::ArmIndex arm,
                           link::Feedback outcome, std::int64_t clock) {
  Delivery d{vehicle_id, context, arm, {}};
  if (auto ev = deliver_feedback(outcome, cfg_, clock)) {
    d.event = *ev;
  } else {
    // Nothing on the air: the transmitter waits for the deadline.
    d.event = FeedbackEvent{clock + cfg_.delay, link::Feedback::Ack, true};
  }
  pending_.emplace(std::make_tuple(d.event.time, vehicle_id, sequence_++), d);
}

std::vector<FeedbackChannel::Delivery> FeedbackChannel::collect(std::int64_t clock) {
  std::vector<Delivery> out;
  auto it = pending_.begin();
  while (it != pending_.end() && std::get<0>(it->first) <= clock) {
    out.push_back(it->second);
    it = pending_.erase(it);
  }
  return out;
}

std::vector<risk::Detection> generate_behavior_events(const BehaviorEventParams& params, Rng& rng,
                                                      std::int64_t rounds) {
  std::vector<std::string> errors;
  if (!(params.rate >= 0.0 && params.rate <= 1.0))
    errors.push_back(fmt::format("behavior event rate {} outside [0, 1]", params.rate));
  std::vector<double> dist = params.distribution;
  if (dist.empty()) dist.assign(risk::kBehaviorCount, 1.0 / risk::kBehaviorCount);
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) errors.push_back("behavior distribution has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    errors.push_back(fmt::format("behavior distribution sums to {}, not 1", sum));
  if (!errors.empty()) throw ValidationError(std::move(errors));

  std::vector<double> cdf(dist.size());
  std::partial_sum(dist.begin(), dist.end(), cdf.begin());
  std::vector<risk::Detection> events;
  for (std::int64_t t = 1; t <= rounds; ++t) {
    if (!rng.bernoulli(params.rate)) continue;
    const double u = rng.uniform() * sum;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    // Skip zero-probability ids that share a cdf value with their predecessor.
    std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), dist.size() - 1);
    while (dist[idx] == 0.0 && idx + 1 < dist.size()) ++idx;
    events.push_back({t, static_cast<int>(idx) + 1});
  }
  return events;
}

bool Summary::operator==(const Summary& o) const {
  auto counters = [](const link::ThroughputCounters& c) {
    return std::tie(c.bits_tx_ok, c.bits_per_sf_max, c.sfs_observed, c.sfs_per_harq);
  };
  return rows == o.rows && cumulative_regret == o.cumulative_regret &&
         transmissions == o.transmissions && block_errors == o.block_errors &&
         failed_processes == o.failed_processes && collided_rows == o.collided_rows &&
         reward_divergence == o.reward_divergence && counters(throughput) == counters(o.throughput) &&
         offered_bits == o.offered_bits && arm_counts == o.arm_counts &&
         per_behavior == o.per_behavior;
}

namespace {

Summary empty_summary(const ExperimentConfig& config) {
  Summary s;
  s.throughput.bits_per_sf_max = config.link.tbs_table.max_bits(config.link.nprb);
  s.throughput.sfs_per_harq = config.link.sfs_per_harq;
  return s;
}

void accumulate(Summary& s, const MetricsRow& row, const ExperimentConfig& config) {
  const int tbs_index = config.bandit.arms[static_cast<std::size_t>(row.arm - 1)];
  const std::int64_t tbs = config.link.tbs_table.lookup(config.link.nprb, tbs_index);
  const std::int64_t errors = row.harq_attempts - (row.ack ? 1 : 0);
  const std::int64_t bits_ok = row.ack ? tbs : 0;

  ++s.rows;
  s.cumulative_regret += row.regret_step;
  s.transmissions += row.harq_attempts;
  s.block_errors += errors;
  s.failed_processes += row.ack ? 0 : 1;
  s.collided_rows += row.collided ? 1 : 0;
  s.reward_divergence += ((row.regret_step == 0) != row.ack) ? 1 : 0;
  s.throughput.bits_tx_ok += bits_ok;
  s.throughput.sfs_observed += static_cast<std::int64_t>(row.harq_attempts) * config.link.sfs_per_harq;
  s.offered_bits += tbs * row.harq_attempts;
  ++s.arm_counts[row.arm];

  auto& b = s.per_behavior[row.behavior_id];
  ++b.rows;
  b.transmissions += row.harq_attempts;
  b.block_errors += errors;
  b.bits_ok += bits_ok;
  b.offered_bits += tbs * row.harq_attempts;
}

struct Vehicle {
  int id = 0;
  risk::BehaviorContext context;
  std::map<int, bandit::Agent> agents;  // context key -> learner
  bandit::BudgetWindow budget;
  std::optional<sched::Reservation> reservation;
  double snr_db = 0.0;
  std::int64_t regret_cum = 0;
  int initial_behavior = 0;
  std::map<std::int64_t, int> events;  // round -> detected id
  Rng bandit_rng;
  Rng link_rng;
  Rng sched_rng;

  bandit::Agent& agent(int key, int arm_count, const bandit::PolicyParams& params) {
    auto it = agents.find(key);
    if (it == agents.end()) it = agents.emplace(key, bandit::Agent(arm_count, params)).first;
    return it->second;
  }
};

}  // namespace

Summary summarize(const std::vector<MetricsRow>& rows, const ExperimentConfig& config) {
  Summary s = empty_summary(config);
  for (const auto& row : rows) accumulate(s, row, config);
  return s;
}

MetricsLog run_episode(const ExperimentConfig& config, std::uint64_t seed) {
  require_valid(config);
  return run_episode(config, seed, load_behavior_catalog(config));
}

MetricsLog run_episode(const ExperimentConfig& config, std::uint64_t seed,
                       const risk::BehaviorCatalog& catalog) {
  require_valid(config);

  const int arm_count = static_cast<int>(config.bandit.arms.size());
  const auto costs = arm_costs(config);
  const auto& policy = config.bandit.policy;

  // Arm whose TBS index is the catalog's ground truth for each behavior.
  std::map<int, bandit::ArmIndex> oracle_arm;
  for (const auto& e : catalog.entries()) {
    auto it = std::find(config.bandit.arms.begin(), config.bandit.arms.end(), e.tbs_index);
    oracle_arm[e.behavior_id] =
        it == config.bandit.arms.end() ? 0 : static_cast<int>(it - config.bandit.arms.begin()) + 1;
  }

  std::vector<Vehicle> vehicles;
  vehicles.reserve(static_cast<std::size_t>(config.n_vehicles));
  for (int i = 0; i < config.n_vehicles; ++i) {
    const int id = i + 1;
    Vehicle v{id,
              risk::BehaviorContext(catalog.size(), config.behavior.decay_rounds),
              {},
              bandit::BudgetWindow(config.bandit.budget, config.bandit.window),
              std::nullopt,
              config.link.snr.mean_db,
              0,
              0,
              {},
              Rng::stream(seed, static_cast<std::uint64_t>(id), kBanditStream),
              Rng::stream(seed, static_cast<std::uint64_t>(id), kLinkStream),
              Rng::stream(seed, static_cast<std::uint64_t>(id), kSchedStream)};
    if (!config.behavior.initial_ids.empty())
      v.initial_behavior =
          config.behavior.initial_ids[static_cast<std::size_t>(i) % config.behavior.initial_ids.size()];
    Rng behavior_rng = Rng::stream(seed, static_cast<std::uint64_t>(id), kBehaviorStream);
    for (const auto& d : generate_behavior_events(
             {config.behavior.event_rate, config.behavior.distribution}, behavior_rng, config.rounds))
      v.events[d.t] = d.behavior_id;
    vehicles.push_back(std::move(v));
  }

  MetricsLog log;
  log.summary = empty_summary(config);
  log.rows.reserve(static_cast<std::size_t>(config.rounds * config.n_vehicles));
  FeedbackChannel channel(config.feedback);
  sched::ResourcePool pool{config.sched.subchannels, config.sched.window_sfs, {}};
  std::vector<bandit::ArmIndex> chosen(vehicles.size());
  std::vector<int> keys(vehicles.size());

  auto apply_feedback = [&](std::int64_t clock) {
    for (const auto& d : channel.collect(clock)) {
      auto& v = vehicles[static_cast<std::size_t>(d.vehicle_id - 1)];
      v.agent(d.context, arm_count, policy)
          .observe(d.arm, d.event.outcome == link::Feedback::Ack ? 1 : 0);
    }
  };

  for (std::int64_t t = 1; t <= config.rounds; ++t) {
    apply_feedback(t);

    // Context and decision.
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      auto& v = vehicles[i];
      std::optional<int> detected;
      if (auto it = v.events.find(t); it != v.events.end())
        detected = it->second;
      else if (v.initial_behavior != 0 && (t == 1 || config.behavior.persistent))
        detected = v.initial_behavior;
      v.context.update(detected, t);

      keys[i] = config.bandit.contextual ? v.context.effective_behavior() : 0;
      const bandit::ActionSpace space{config.bandit.arms, costs, v.budget.remaining()};
      const auto feasible = bandit::knapsack_filter(space);
      chosen[i] = v.agent(keys[i], arm_count, policy).select(feasible, v.bandit_rng);
      v.budget.charge(costs[static_cast<std::size_t>(chosen[i] - 1)]);
    }

    // Semi-persistent scheduling, applied in vehicle-id order.
    std::set<int> collided;
    if (config.sched.enabled) {
      for (auto& v : vehicles) {
        if (v.reservation) continue;
        std::vector<sched::SciMessage> heard;
        for (const auto& other : vehicles) {
          if (other.id == v.id || !other.reservation) continue;
          if (config.sched.hearing_radius >= 0 && std::abs(other.id - v.id) > config.sched.hearing_radius)
            continue;
          heard.push_back(sched::SciMessage::announce(*other.reservation));
        }
        const auto sel = sched::sense_and_select(pool, heard, v.sched_rng, config.sched.sps.best_fraction);
        if (sel.congested) ++log.congestion_events;
        v.reservation = sched::Reservation{
            v.id, sel.resource.subchannel, sel.resource.phase, config.sched.sps.interval_sfs,
            static_cast<int>(v.sched_rng.uniform_int(config.sched.sps.counter_min,
                                                     config.sched.sps.counter_max))};
        pool.occupy(sel.resource, v.id);
      }
      std::vector<sched::Reservation> live;
      for (const auto& v : vehicles) live.push_back(*v.reservation);
      for (const auto& [a, b] : sched::detect_collisions(live)) {
        collided.insert(a);
        collided.insert(b);
      }
    }

    // Transmission, reward, bookkeeping.
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      auto& v = vehicles[i];
      const bandit::ArmIndex arm = chosen[i];
      const int tbs_index = config.bandit.arms[static_cast<std::size_t>(arm - 1)];
      const int behavior = v.context.effective_behavior();
      const bool hit = collided.count(v.id) != 0;

      v.snr_db = link::snr_evolve(v.snr_db, v.link_rng, config.link.snr);
      link::HarqProcess process(config.link.harq_max_transmissions);
      link::ThroughputCounters scratch;
      scratch.sfs_per_harq = config.link.sfs_per_harq;
      const auto result = link::harq_run(
          process,
          [&](int) {
            return hit ? link::Feedback::Nack
                       : link::transmit_block(config.link.bler, config.link.nprb, tbs_index, v.snr_db,
                                              v.link_rng);
          },
          scratch, config.link.tbs_table.lookup(config.link.nprb, tbs_index));
      const bool ack = result.state == link::HarqState::DoneAck;

      const bandit::ArmIndex optimal = oracle_arm.at(behavior);
      int reward = 0;
      if (config.reward_mode == RewardMode::OracleArm) {
        reward = arm == optimal ? 1 : 0;
        v.agent(keys[i], arm_count, policy).observe(arm, reward);
      } else {
        reward = ack ? 1 : 0;
        channel.post(v.id, keys[i], arm, ack ? link::Feedback::Ack : link::Feedback::Nack, t);
      }

      const auto regret = bandit::regret_step(t, optimal, arm, arm_count);
      v.regret_cum += regret.rho;

      MetricsRow row{t,         v.id,     behavior,   arm,    reward, regret.rho, v.regret_cum,
                     v.snr_db,  result.attempts, hit, ack};
      accumulate(log.summary, row, config);
      log.rows.push_back(row);
    }
    if (config.feedback.delay == 0) apply_feedback(t);

    // Reservation counters.
    if (config.sched.enabled) {
      for (auto& v : vehicles) {
        auto next = sched::tick_reservation(*v.reservation, v.sched_rng, config.sched.sps);
        if (auto* r = std::get_if<sched::Reservation>(&next)) {
          v.reservation = *r;
        } else {
          pool.release(v.id);
          v.reservation.reset();
        }
      }
    }
  }

  for (const auto& v : vehicles)
    for (const auto& [key, agent] : v.agents)
      log.posteriors[v.id][key].assign(agent.posteriors().begin(), agent.posteriors().end());
  return log;
}

std::vector<std::pair<std::string, double>> summary_entries(const MetricsLog& log,
                                                            const ExperimentConfig& config) {
  const auto& s = log.summary;
  auto ratio = [](std::int64_t a, std::int64_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  std::vector<std::pair<std::string, double>> e;
  e.emplace_back("schema_version", kSchemaVersion);
  e.emplace_back("rounds", static_cast<double>(config.rounds));
  e.emplace_back("vehicles", config.n_vehicles);
  e.emplace_back("rows", static_cast<double>(s.rows));
  e.emplace_back("cumulative_regret", static_cast<double>(s.cumulative_regret));
  e.emplace_back("mean_cumulative_regret", ratio(s.cumulative_regret, config.n_vehicles));
  e.emplace_back("bler", ratio(s.block_errors, s.transmissions));
  e.emplace_back("residual_bler", ratio(s.failed_processes, s.rows));
  e.emplace_back("throughput_normalized",
                 s.throughput.sfs_observed / s.throughput.sfs_per_harq >= 1
                     ? link::normalized_throughput(s.throughput)
                     : 0.0);
  e.emplace_back("throughput_block_normalized", ratio(s.throughput.bits_tx_ok, s.offered_bits));
  e.emplace_back("collision_rate", ratio(s.collided_rows, s.rows));
  e.emplace_back("congestion_events", static_cast<double>(log.congestion_events));
  e.emplace_back("reward_divergence_rate", ratio(s.reward_divergence, s.rows));
  for (int arm = 1; arm <= static_cast<int>(config.bandit.arms.size()); ++arm) {
    auto it = s.arm_counts.find(arm);
    e.emplace_back(fmt::format("arm_{}_fraction", arm),
                   ratio(it == s.arm_counts.end() ? 0 : it->second, s.rows));
  }
  const double max_bits = s.throughput.bits_per_sf_max;
  for (const auto& [id, b] : s.per_behavior) {
    e.emplace_back(fmt::format("behavior_{}_rows", id), static_cast<double>(b.rows));
    e.emplace_back(fmt::format("behavior_{}_bler", id), ratio(b.block_errors, b.transmissions));
    e.emplace_back(fmt::format("behavior_{}_throughput_normalized", id),
                   b.transmissions == 0 ? 0.0
                                        : static_cast<double>(b.bits_ok) /
                                              (max_bits * static_cast<double>(b.transmissions)));
    e.emplace_back(fmt::format("behavior_{}_throughput_block_normalized", id),
                   ratio(b.bits_ok, b.offered_bits));
  }
  return e;
}

void write_metrics_csv(std::ostream& out, const MetricsLog& log) {
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "t,vehicle_id,behavior_id,arm,reward,regret_step,regret_cum,snr_db,harq_attempts,collided,"
         "ack\n";
  for (const auto& r : log.rows)
    out << fmt::format("{},{},{},{},{},{},{},{:.6f},{},{},{}\n", r.t, r.vehicle_id, r.behavior_id,
                       r.arm, r.reward, r.regret_step, r.regret_cum, r.snr_db, r.harq_attempts,
                       r.collided ? 1 : 0, r.ack ? 1 : 0);
}

void write_summary(std::ostream& out, const std::vector<std::pair<std::string, double>>& entries) {
  for (const auto& [key, value] : entries) out << fmt::format("{} = {}\n", key, value);
}

}  // namespace v2x::sim
