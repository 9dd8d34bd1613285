// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "v2x/bandit.hpp"
#include "v2x/experiments.hpp"
#include "v2x/kernels.hpp"
#include "v2x/link.hpp"
#include "v2x/risk.hpp"
#include "v2x/sched.hpp"

using namespace v2x;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> check;
};

Outcome posterior_bookkeeping() {
  Rng rng(2024);
  int exact = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const auto n = rng.uniform_int(1, 500);
    const double p = rng.uniform();
    bandit::ArmPosterior post;
    std::int64_t wins = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const int r = rng.bernoulli(p) ? 1 : 0;
      wins += r;
      post = bandit::posterior_update(post, r);
    }
    exact += post.alpha == 1.0 + static_cast<double>(wins) &&
             post.beta == 1.0 + static_cast<double>(n - wins);
  }
  return {exact == 1000, fmt::format("{}/1000 sequences exact", exact)};
}

ExperimentConfig convergence_config() {
  ExperimentConfig c;
  c.seed = 1000;
  c.rounds = 30;
  c.bandit.window = 30;
  c.bandit.budget = 30;
  c.behavior.initial_ids = {1};
  return c;
}

const experiments::ConvergenceResult& convergence_run() {
  static const auto r = experiments::convergence(convergence_config(), 100, risk::default_catalog());
  return r;
}

Outcome ts_convergence() {
  const auto& r = convergence_run();
  std::vector<double> locks(r.lock_on.begin(), r.lock_on.end());
  std::sort(locks.begin(), locks.end());
  const double median = 0.5 * (locks[49] + locks[50]);
  std::int64_t late = 0, hits = 0;
  for (const auto& row : r.rows)
    if (row.t >= 11 && row.t <= 30) {
      ++late;
      hits += row.ts_arm == 1;
    }
  const double freq = static_cast<double>(hits) / static_cast<double>(late);
  return {median <= 12 && freq >= 0.9,
          fmt::format("median lock-on {} (<= 12), arm-1 frequency rounds 11-30 {:.4f} (>= 0.9)",
                      median, freq)};
}

Outcome ts_beats_ab() {
  const auto& r = convergence_run();
  double ts = 0, ab = 0;
  int wins = 0;
  for (std::size_t i = 0; i < r.ts_regret.size(); ++i) {
    ts += r.ts_regret[i];
    ab += r.ab_regret[i];
    wins += r.ts_regret[i] < r.ab_regret[i];
  }
  const double n = static_cast<double>(r.ts_regret.size());
  return {ts < ab && wins >= 80,
          fmt::format("mean regret TS {:.2f} vs A/B {:.2f}, TS wins {}/{} (>= 80%)", ts / n, ab / n,
                      wins, r.ts_regret.size())};
}

Outcome bler_waterfall() {
  kernels::LinkSweepParams p;
  p.blocks_per_point = 10000;
  p.seed = 4;
  std::vector<kernels::LinkPoint> pts;
  for (int nprb : {6, 20})
    for (int idx = 1; idx <= 4; ++idx)
      for (int s = -15; s <= 15; ++s) pts.push_back({nprb, idx, static_cast<double>(s), 0});
  const auto cells = kernels::link_sweep(pts, p);

  std::map<std::tuple<int, int, int>, const kernels::LinkCell*> at;
  for (const auto& c : cells)
    at[{c.point.nprb, c.point.tbs_index, static_cast<int>(c.point.snr_db)}] = &c;
  auto sigma = [](const kernels::LinkCell& c) {
    return oracle::binomial_sigma(c.bler_analytic, static_cast<double>(c.transmissions));
  };

  int monotone_fail = 0, order_checked = 0, order_fail = 0;
  for (int nprb : {6, 20})
    for (int idx = 1; idx <= 4; ++idx)
      for (int s = -15; s < 15; ++s) {
        const auto& a = *at.at({nprb, idx, s});
        const auto& b = *at.at({nprb, idx, s + 1});
        const double tol = 3 * std::hypot(sigma(a), sigma(b));
        monotone_fail += b.bler() > a.bler() + tol;
      }
  for (int nprb : {6, 20})
    for (int s = -15; s <= 15; ++s)
      for (int idx = 1; idx < 4; ++idx)
        for (int jdx = idx + 1; jdx <= 4; ++jdx) {
          const auto& lo = *at.at({nprb, idx, s});
          const auto& hi = *at.at({nprb, jdx, s});
          if (hi.bler_analytic - lo.bler_analytic <= 0.05) continue;
          ++order_checked;
          order_fail += !(hi.bler() > lo.bler());
        }
  return {monotone_fail == 0 && order_fail == 0 && order_checked > 0,
          fmt::format("{} monotonicity violations, {} of {} TBS-order checks failed", monotone_fail,
                      order_fail, order_checked)};
}

Outcome throughput_formula() {
  // Exact quotients from rational arithmetic, rounded once to double.
  struct Case {
    std::int64_t ok, max, sfs, per;
    double expected;
  };
  const std::vector<Case> cases{
      {3, 1032, 3, 2, 0.0029069767441860465},       {19428, 712, 284, 4, 0.3843171387877829},
      {76874, 3426, 52, 2, 0.863015851632314},      {2724, 1032, 30, 3, 0.26395348837209304},
      {39430, 152, 382, 1, 0.6790782584734086},     {214871, 3426, 291, 3, 0.6465747076630497},
      {15795, 1416, 242, 4, 0.18591101694915255},   {7913, 2472, 181, 4, 0.07113448399856166},
      {58526, 1032, 244, 1, 0.23242311602490787},   {72107, 1416, 393, 2, 0.25981133979015336},
      {12274, 536, 404, 2, 0.11336264223437269},    {20353, 2472, 246, 4, 0.13497400392593772},
      {15982, 536, 443, 2, 0.13491929492807456},    {44813, 712, 325, 3, 0.5827741364960466},
      {9795, 328, 180, 4, 0.6636178861788617},      {2996, 152, 166, 1, 0.11873811033608117},
      {34320, 1416, 282, 1, 0.08594783026806106},   {988502, 2472, 408, 1, 0.9800966907798718},
      {66480, 712, 478, 4, 0.784628458124823},      {20197, 328, 160, 2, 0.769702743902439},
  };
  int exact = 0;
  for (const auto& c : cases) exact += link::normalized_throughput({c.ok, c.max, c.sfs, c.per}) == c.expected;
  const bool floor_case = link::normalized_throughput({100, 100, 3, 2}) == 1.0;
  return {exact == 20 && floor_case,
          fmt::format("{}/20 tuples exact, floor(3/2) case {}", exact, floor_case ? "ok" : "wrong")};
}

Outcome risk_ordering() {
  ExperimentConfig c;
  c.seed = 6;
  c.risk_profile = {"oracle", -2.0, {6}, 100000};
  const auto rows = experiments::risk_profile(c, risk::default_catalog());
  std::map<int, const kernels::LinkCell*> group;
  for (const auto& r : rows) group.emplace(r.tbs_index, &r.cell);
  bool ok = group.size() == 4;
  std::string detail = "BLER";
  for (int g = 1; g <= 4 && ok; ++g) {
    detail += fmt::format(" g{}={:.4f}", g, group.at(g)->bler());
    if (g == 1) continue;
    const auto& a = *group.at(g - 1);
    const auto& b = *group.at(g);
    const double sd = std::hypot(oracle::binomial_sigma(a.bler(), static_cast<double>(a.transmissions)),
                                 oracle::binomial_sigma(b.bler(), static_cast<double>(b.transmissions)));
    const bool gap = b.bler() - a.bler() > 3 * sd;
    ok = ok && gap;
    detail += gap ? "" : " (gap below 3 sigma)";
  }
  return {ok, detail};
}

Outcome tbs_fidelity() {
  const auto t = link::TbsTable::standard();
  const std::map<int, std::vector<int>> expected{{6, {152, 328, 712, 1032}},
                                                 {20, {536, 1416, 2472, 3426}}};
  int exact = 0;
  for (const auto& [nprb, bits] : expected)
    for (int i = 0; i < 4; ++i) exact += link::tbs_lookup(t, nprb, i + 1) == bits[static_cast<std::size_t>(i)];
  return {exact == 8, fmt::format("{}/8 lookups exact", exact)};
}

Outcome polynomial_fit() {
  const auto cat = risk::default_catalog();
  const auto curve = risk::fit_curve(cat);
  std::vector<double> x, w = cat.weights();
  for (int i = 1; i <= 13; ++i) x.push_back(i);
  const auto ref = oracle::vandermonde_lu(x, w);
  double worst = 0, worst_ref = 0, worst_agree = 0;
  for (int i = 1; i <= 13; ++i) {
    const double fit = risk::evaluate_polynomial(curve, i);
    const double lu = static_cast<double>(oracle::horner(ref, i));
    worst = std::max(worst, std::abs(fit - w[static_cast<std::size_t>(i - 1)]));
    worst_ref = std::max(worst_ref, std::abs(lu - w[static_cast<std::size_t>(i - 1)]));
    worst_agree = std::max(worst_agree, std::abs(fit - lu));
  }
  return {worst <= 1e-6 && worst_ref <= 1e-6 && worst_agree <= 1e-6,
          fmt::format("max anchor residual {:.2e}, dense-solve residual {:.2e}, disagreement {:.2e}",
                      worst, worst_ref, worst_agree)};
}

Outcome sps_sanity() {
  // Direct scheduler loop with brute-force occupancy enumeration.
  sched::ResourcePool pool{5, 5, {}};
  const sched::SpsParams sps;
  Rng rng(9);
  std::vector<std::optional<sched::Reservation>> res(10);
  std::vector<bool> selected_once(10, false);
  int steady_rounds = 0, collisions = 0;
  for (int round = 0; round < 2000; ++round) {
    for (int v = 0; v < 10; ++v) {
      if (res[static_cast<std::size_t>(v)]) continue;
      std::vector<sched::SciMessage> heard;
      for (int o = 0; o < 10; ++o)
        if (o != v && res[static_cast<std::size_t>(o)])
          heard.push_back(sched::SciMessage::announce(*res[static_cast<std::size_t>(o)]));
      const auto sel = sched::sense_and_select(pool, heard, rng);
      res[static_cast<std::size_t>(v)] = sched::Reservation{
          v + 1, sel.resource.subchannel, sel.resource.phase, sps.interval_sfs,
          static_cast<int>(rng.uniform_int(sps.counter_min, sps.counter_max))};
      pool.occupy(sel.resource, v + 1);
      selected_once[static_cast<std::size_t>(v)] = true;
    }
    if (std::all_of(selected_once.begin(), selected_once.end(), [](bool b) { return b; })) {
      std::vector<std::pair<int, int>> slots;
      std::vector<sched::Reservation> live;
      for (const auto& r : res) {
        slots.emplace_back(r->subchannel, r->subframe_phase);
        live.push_back(*r);
      }
      collisions += oracle::colliding_vehicles(slots);
      collisions += static_cast<int>(sched::detect_collisions(live).size());
      ++steady_rounds;
    }
    for (int v = 0; v < 10; ++v) {
      auto next = sched::tick_reservation(*res[static_cast<std::size_t>(v)], rng, sps);
      if (auto* r = std::get_if<sched::Reservation>(&next)) {
        res[static_cast<std::size_t>(v)] = *r;
      } else {
        pool.release(v + 1);
        res[static_cast<std::size_t>(v)].reset();
      }
    }
  }

  // Same through the full episode loop.
  ExperimentConfig c;
  c.rounds = 500;
  c.n_vehicles = 10;
  c.sched.subchannels = 5;
  c.sched.window_sfs = 5;
  const auto log = sim::run_episode(c, 9);
  std::int64_t episode_collisions = 0;
  for (const auto& row : log.rows) episode_collisions += row.collided;

  return {collisions == 0 && episode_collisions == 0 && steady_rounds > 0,
          fmt::format("{} colliding vehicle-rounds over {} steady rounds; {} collided episode rows",
                      collisions, steady_rounds, episode_collisions)};
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / "v2x_acceptance_determinism";
  fs::remove_all(base);
  ExperimentConfig c;
  c.seed = 42;
  c.n_vehicles = 4;
  c.behavior.event_rate = 0.02;
  c.reward_mode = RewardMode::HarqAck;
  experiments::cmd_run(c, base / "a");
  experiments::cmd_run(c, base / "b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto a = slurp(base / "a" / "metrics.csv");
  const auto b = slurp(base / "b" / "metrics.csv");
  return {!a.empty() && a == b, fmt::format("metrics.csv {} bytes, identical: {}", a.size(), a == b)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "posterior bookkeeping", 1.0, posterior_bookkeeping},
      {2, "Thompson sampling convergence", 5.0, ts_convergence},
      {3, "Thompson sampling beats A/B testing", 5.0, ts_beats_ab},
      {4, "BLER waterfall ordering", 60.0, bler_waterfall},
      {5, "normalized throughput formula", 1.0, throughput_formula},
      {6, "risk ordering end to end", 60.0, risk_ordering},
      {7, "TBS table fidelity", 1.0, tbs_fidelity},
      {8, "polynomial fit", 1.0, polynomial_fit},
      {9, "SPS collision-free steady state", 1.0, sps_sanity},
      {10, "byte-identical reruns", 5.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = out.ok && in_time;
    failed += !pass;
    fmt::print("{} [{:>2}] {}: {} ({:.3f} s{})\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail,
               secs, in_time ? "" : fmt::format(", limit {} s", c.limit_s));
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
