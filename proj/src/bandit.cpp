#include "v2x/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "v2x/error.hpp"

namespace v2x::bandit {

ArmPosterior posterior_update(ArmPosterior p, int reward) {
  if (reward != 0 && reward != 1) throw DomainError("posterior_update: reward must be 0 or 1");
  p.alpha += reward;
  p.beta += 1 - reward;
  return p;
}

void ActionSpace::validate() const {
  if (arms.size() < 2) throw ConfigError("action space needs at least 2 arms");
  if (costs.size() != arms.size()) throw ConfigError("action space: one cost per arm required");
  std::set<int> seen;
  for (int a : arms) {
    if (a < 1) throw ConfigError("action space: arm indices are 1-based");
    if (!seen.insert(a).second) throw ConfigError("action space: duplicate arm index");
  }
  for (double c : costs)
    if (!(c >= 0.0)) throw ConfigError("action space: costs must be nonnegative");
  if (!(budget >= 0.0)) throw ConfigError("action space: budget must be nonnegative");
}

std::vector<ArmIndex> knapsack_filter(const ActionSpace& space) {
  std::vector<ArmIndex> feasible;
  for (int k = 0; k < space.size(); ++k)
    if (space.costs[k] <= space.budget) feasible.push_back(k + 1);
  return feasible;
}

BudgetWindow::BudgetWindow(double budget, int window) : budget_(budget), window_(window) {
  if (window < 1) throw ConfigError("budget window must be at least 1 round");
  if (!(budget >= 0.0)) throw ConfigError("budget must be nonnegative");
}

double BudgetWindow::remaining() const {
  return budget_ - std::accumulate(spent_.begin(), spent_.end(), 0.0);
}

void BudgetWindow::charge(double cost) {
  spent_.push_back(cost);
  while (static_cast<int>(spent_.size()) > window_ - 1) spent_.pop_front();
}

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::ThompsonSampling: return "thompson";
    case PolicyKind::ABTesting: return "ab_testing";
    case PolicyKind::EpsilonGreedy: return "epsilon_greedy";
    case PolicyKind::UCB1: return "ucb1";
  }
  return "unknown";
}

PolicyKind policy_from_string(std::string_view name) {
  for (auto k : {PolicyKind::ThompsonSampling, PolicyKind::ABTesting, PolicyKind::EpsilonGreedy,
                 PolicyKind::UCB1})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

namespace {

void require_feasible(std::span<const ArmIndex> feasible, std::size_t arm_count) {
  if (feasible.empty()) throw NoFeasibleArm();
  for (ArmIndex a : feasible)
    if (a < 1 || static_cast<std::size_t>(a) > arm_count)
      throw DomainError("feasible arm index out of range");
}

// Lowest-index arm with the best empirical success rate among the candidates.
ArmIndex empirical_best(std::span<const ArmStats> history, std::span<const ArmIndex> candidates) {
  ArmIndex best = candidates.front();
  double best_rate = history[best - 1].success_rate();
  for (ArmIndex a : candidates) {
    const double r = history[a - 1].success_rate();
    if (r > best_rate || (r == best_rate && a < best)) {
      best = a;
      best_rate = r;
    }
  }
  return best;
}

std::vector<ArmIndex> sorted_unique(std::span<const ArmIndex> arms) {
  std::vector<ArmIndex> v(arms.begin(), arms.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

ArmIndex ts_select(std::span<const ArmPosterior> posteriors, std::span<const ArmIndex> feasible,
                   Rng& rng) {
  require_feasible(feasible, posteriors.size());
  const auto arms = sorted_unique(feasible);
  ArmIndex best = arms.front();
  double best_theta = -1.0;
  for (ArmIndex a : arms) {
    const auto& p = posteriors[a - 1];
    const double theta = rng.beta(p.alpha, p.beta);
    if (theta > best_theta) {
      best_theta = theta;
      best = a;
    }
  }
  return best;
}

ArmIndex ab_select(std::span<const ArmStats> history, std::int64_t t, int explore_rounds) {
  if (t < 1) throw DomainError("ab_select: t must be >= 1");
  const auto k = static_cast<std::int64_t>(history.size());
  if (k < 1) throw DomainError("ab_select: empty history");
  if (t <= explore_rounds) return static_cast<ArmIndex>((t - 1) % k + 1);
  std::vector<ArmIndex> all(static_cast<std::size_t>(k));
  std::iota(all.begin(), all.end(), 1);
  return empirical_best(history, all);
}

ArmIndex epsilon_greedy_select(std::span<const ArmStats> history,
                               std::span<const ArmIndex> feasible, double epsilon, Rng& rng) {
  require_feasible(feasible, history.size());
  const auto arms = sorted_unique(feasible);
  for (ArmIndex a : arms)
    if (history[a - 1].pulls == 0) return a;
  if (rng.bernoulli(epsilon))
    return arms[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(arms.size()) - 1))];
  return empirical_best(history, arms);
}

ArmIndex ucb1_select(std::span<const ArmStats> history, std::span<const ArmIndex> feasible) {
  require_feasible(feasible, history.size());
  const auto arms = sorted_unique(feasible);
  std::int64_t total = 0;
  for (ArmIndex a : arms) {
    if (history[a - 1].pulls == 0) return a;
    total += history[a - 1].pulls;
  }
  ArmIndex best = arms.front();
  double best_score = -1.0;
  for (ArmIndex a : arms) {
    const auto& s = history[a - 1];
    const double score = s.success_rate() +
        std::sqrt(2.0 * std::log(static_cast<double>(total)) / static_cast<double>(s.pulls));
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

RegretRecord regret_step(std::int64_t t, ArmIndex optimal, ArmIndex chosen, int arm_count) {
  if (optimal < 1 || optimal > arm_count || chosen < 1 || chosen > arm_count)
    throw ConfigError("regret_step: arm index outside 1.." + std::to_string(arm_count));
  return RegretRecord{t, chosen, optimal, std::abs(optimal - chosen)};
}

Agent::Agent(int arm_count, PolicyParams params)
    : params_(params),
      posteriors_(static_cast<std::size_t>(arm_count)),
      stats_(static_cast<std::size_t>(arm_count)) {
  if (arm_count < 2) throw ConfigError("agent needs at least 2 arms");
  if (params_.kind == PolicyKind::ABTesting) {
    if (params_.explore_rounds == 0) params_.explore_rounds = 2 * arm_count;
    if (params_.explore_rounds < arm_count)
      throw ConfigError("A/B testing: explore_rounds must be >= number of arms");
  }
  if (params_.kind == PolicyKind::EpsilonGreedy && !(params_.epsilon > 0.0 && params_.epsilon < 1.0))
    throw ConfigError("epsilon-greedy: epsilon must lie in (0, 1)");
}

ArmIndex Agent::select(std::span<const ArmIndex> feasible, Rng& rng) {
  require_feasible(feasible, posteriors_.size());
  ++decisions_;
  switch (params_.kind) {
    case PolicyKind::ThompsonSampling:
      return ts_select(posteriors_, feasible, rng);
    case PolicyKind::ABTesting: {
      const auto arms = sorted_unique(feasible);
      if (decisions_ > params_.explore_rounds) return empirical_best(stats_, arms);
      // Round-robin position, skipping forward past arms the budget excludes.
      const ArmIndex slot = ab_select(stats_, decisions_, params_.explore_rounds);
      const int k = arm_count();
      for (int step = 0; step < k; ++step) {
        const ArmIndex a = (slot - 1 + step) % k + 1;
        if (std::binary_search(arms.begin(), arms.end(), a)) return a;
      }
      return arms.front();
    }
    case PolicyKind::EpsilonGreedy:
      return epsilon_greedy_select(stats_, feasible, params_.epsilon, rng);
    case PolicyKind::UCB1:
      return ucb1_select(stats_, feasible);
  }
  throw StateError("unknown policy kind");
}

void Agent::observe(ArmIndex arm, int reward) {
  if (arm < 1 || arm > arm_count()) throw DomainError("observe: arm index out of range");
  auto& p = posteriors_[static_cast<std::size_t>(arm - 1)];
  p = posterior_update(p, reward);
  auto& s = stats_[static_cast<std::size_t>(arm - 1)];
  ++s.pulls;
  s.successes += reward;
}

}  // namespace v2x::bandit
