#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "v2x/rng.hpp"

namespace v2x::bandit {

/// 1-based position in the action space (arm k plays TBS index arms[k-1]).
using ArmIndex = int;

/// Beta(alpha, beta) success/failure state of one arm.
struct ArmPosterior {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
  bool operator==(const ArmPosterior&) const = default;
};

/// Adds the reward to alpha and its complement to beta. reward must be 0 or 1.
ArmPosterior posterior_update(ArmPosterior p, int reward);

/// Pull and success counts, for the frequentist baselines.
struct ArmStats {
  std::int64_t pulls = 0;
  std::int64_t successes = 0;

  double success_rate() const {
    return pulls == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(pulls);
  }
  bool operator==(const ArmStats&) const = default;
};

/// The arms, their costs and the budget available for the current decision.
struct ActionSpace {
  std::vector<int> arms;     // TBS indices, distinct, 1-based
  std::vector<double> costs; // one per arm, nonnegative
  double budget = 0.0;

  int size() const { return static_cast<int>(arms.size()); }

  /// Throws ConfigError on K < 2, duplicate or non-positive indices,
  /// mismatched cost count or negative cost/budget.
  void validate() const;
};

/// Arms whose individual cost fits in the remaining budget.
std::vector<ArmIndex> knapsack_filter(const ActionSpace& space);

/// Budget enforced over a sliding window of the last W decisions.
///
/// remaining() is budget minus the cost charged in the previous W-1 rounds,
/// so the current round plus its predecessors never exceed the budget.
class BudgetWindow {
public:
  BudgetWindow(double budget, int window);

  double remaining() const;
  void charge(double cost);

  double budget() const { return budget_; }
  int window() const { return window_; }

private:
  double budget_;
  int window_;
  std::deque<double> spent_;
};

enum class PolicyKind { ThompsonSampling, ABTesting, EpsilonGreedy, UCB1 };

std::string_view to_string(PolicyKind kind);
/// Accepts the to_string() spellings; throws ConfigError otherwise.
PolicyKind policy_from_string(std::string_view name);

struct PolicyParams {
  PolicyKind kind = PolicyKind::ThompsonSampling;
  int explore_rounds = 0;  // A/B testing; 0 means 2K
  double epsilon = 0.1;    // epsilon-greedy

  bool operator==(const PolicyParams&) const = default;
};

/// argmax over the feasible arms of one Beta draw per arm. Draws are taken for
/// feasible arms only, in increasing arm order; ties go to the lowest index.
ArmIndex ts_select(std::span<const ArmPosterior> posteriors, std::span<const ArmIndex> feasible,
                   Rng& rng);

/// Explore-then-commit: round-robin for t <= explore_rounds, then the arm with
/// the best empirical success rate (lowest index on ties).
ArmIndex ab_select(std::span<const ArmStats> history, std::int64_t t, int explore_rounds);

/// Plays every unpulled feasible arm once, then explores uniformly with
/// probability epsilon and exploits the empirical best otherwise.
ArmIndex epsilon_greedy_select(std::span<const ArmStats> history,
                               std::span<const ArmIndex> feasible, double epsilon, Rng& rng);

/// Plays every unpulled feasible arm once, then maximizes mean + sqrt(2 ln n / n_k).
ArmIndex ucb1_select(std::span<const ArmStats> history, std::span<const ArmIndex> feasible);

/// Per-round regret |optimal - chosen|.
struct RegretRecord {
  std::int64_t t = 0;
  ArmIndex chosen = 0;
  ArmIndex optimal = 0;
  int rho = 0;
};

/// Throws ConfigError if either index is outside 1..arm_count.
RegretRecord regret_step(std::int64_t t, ArmIndex optimal, ArmIndex chosen, int arm_count);

class RegretTracker {
public:
  void add(const RegretRecord& r) { cumulative_ += r.rho; }
  std::int64_t cumulative() const { return cumulative_; }

private:
  std::int64_t cumulative_ = 0;
};

/// One learner: posteriors and counts for K arms plus its policy.
class Agent {
public:
  Agent(int arm_count, PolicyParams params);

  /// Chooses among the feasible arms. Throws NoFeasibleArm when empty.
  ArmIndex select(std::span<const ArmIndex> feasible, Rng& rng);
  void observe(ArmIndex arm, int reward);

  int arm_count() const { return static_cast<int>(posteriors_.size()); }
  std::int64_t decisions() const { return decisions_; }
  const PolicyParams& params() const { return params_; }
  std::span<const ArmPosterior> posteriors() const { return posteriors_; }
  std::span<const ArmStats> stats() const { return stats_; }

private:
  PolicyParams params_;
  std::vector<ArmPosterior> posteriors_;
  std::vector<ArmStats> stats_;
  std::int64_t decisions_ = 0;
};

}  // namespace v2x::bandit
