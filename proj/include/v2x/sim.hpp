#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "v2x/bandit.hpp"
#include "v2x/config.hpp"
#include "v2x/link.hpp"
#include "v2x/risk.hpp"
#include "v2x/rng.hpp"

namespace v2x::sim {

inline constexpr int kSchemaVersion = 1;

/// Stream purposes for Rng::stream(seed, vehicle_id, purpose).
enum StreamPurpose : std::uint64_t {
  kBehaviorStream = 1,
  kBanditStream = 2,
  kLinkStream = 3,
  kSchedStream = 4,
};

// ---------------------------------------------------------------------------
// Feedback

/// A HARQ outcome as seen by the transmitter: explicit ACK/NACK, or an ACK
/// inferred because no NACK arrived by the deadline.
struct FeedbackEvent {
  std::int64_t time = 0;
  link::Feedback outcome = link::Feedback::Ack;
  bool implicit = false;
  bool operator==(const FeedbackEvent&) const = default;
};

/// What the receiver sends for `outcome` at `clock`. AckNack always answers;
/// NackOnly only answers a NACK, so an ACK yields no event.
std::optional<FeedbackEvent> deliver_feedback(link::Feedback outcome, const FeedbackConfig& cfg,
                                              std::int64_t clock);

/// Pending feedback of all vehicles, released in (time, vehicle id) order.
class FeedbackChannel {
public:
  struct Delivery {
    int vehicle_id = 0;
    int context = 0;
    bandit::ArmIndex arm = 0;
    FeedbackEvent event;
  };

  explicit FeedbackChannel(FeedbackConfig cfg) : cfg_(cfg) {}

  void post(int vehicle_id, int context, bandit::ArmIndex arm, link::Feedback outcome,
            std::int64_t clock);
  /// Everything due at or before `clock`. In NackOnly mode a silent deadline
  /// turns into an implicit ACK.
  std::vector<Delivery> collect(std::int64_t clock);
  std::size_t pending() const { return pending_.size(); }

private:
  FeedbackConfig cfg_;
  // (deadline, vehicle, sequence) -> delivery; nullopt event means "silent so far".
  std::map<std::tuple<std::int64_t, int, std::uint64_t>, Delivery> pending_;
  std::uint64_t sequence_ = 0;
};

// ---------------------------------------------------------------------------
// Behavior events

struct BehaviorEventParams {
  double rate = 0.0;                 // per-round arrival probability
  std::vector<double> distribution;  // over ids 1..N; empty means uniform over 13
};

/// Per-round Bernoulli(rate) arrivals with ids drawn from the distribution.
/// Throws ValidationError for a malformed distribution or rate.
std::vector<risk::Detection> generate_behavior_events(const BehaviorEventParams& params, Rng& rng,
                                                      std::int64_t rounds);

// ---------------------------------------------------------------------------
// Metrics

struct MetricsRow {
  std::int64_t t = 0;
  int vehicle_id = 0;
  int behavior_id = 0;
  int arm = 0;
  int reward = 0;
  int regret_step = 0;
  std::int64_t regret_cum = 0;
  double snr_db = 0.0;
  int harq_attempts = 0;
  bool collided = false;
  bool ack = false;

  bool operator==(const MetricsRow&) const = default;
};

/// Aggregates derivable from the rows alone.
struct Summary {
  std::int64_t rows = 0;
  std::int64_t cumulative_regret = 0;   // summed over vehicles
  std::int64_t transmissions = 0;       // HARQ attempts
  std::int64_t block_errors = 0;        // NACKed attempts
  std::int64_t failed_processes = 0;
  std::int64_t collided_rows = 0;
  std::int64_t reward_divergence = 0;   // rows where oracle correctness != HARQ ACK
  link::ThroughputCounters throughput;  // normalized by the largest TBS at the NPRB
  std::int64_t offered_bits = 0;        // sum over attempts of the attempted TBS
  std::map<int, std::int64_t> arm_counts;

  struct PerBehavior {
    std::int64_t rows = 0;
    std::int64_t transmissions = 0;
    std::int64_t block_errors = 0;
    std::int64_t bits_ok = 0;
    std::int64_t offered_bits = 0;
    bool operator==(const PerBehavior&) const = default;
  };
  std::map<int, PerBehavior> per_behavior;

  bool operator==(const Summary&) const;
};

/// Rows of one episode plus incrementally maintained aggregates.
struct MetricsLog {
  std::vector<MetricsRow> rows;
  Summary summary;
  std::int64_t congestion_events = 0;
  /// Final posteriors: vehicle id -> context key -> per-arm Beta state.
  std::map<int, std::map<int, std::vector<bandit::ArmPosterior>>> posteriors;
};

/// Recomputes the aggregates from rows (TBS sizes come from the config).
Summary summarize(const std::vector<MetricsRow>& rows, const ExperimentConfig& config);

/// Key/value view of a summary, in output order.
std::vector<std::pair<std::string, double>> summary_entries(const MetricsLog& log,
                                                            const ExperimentConfig& config);

void write_metrics_csv(std::ostream& out, const MetricsLog& log);
void write_summary(std::ostream& out, const std::vector<std::pair<std::string, double>>& entries);

// ---------------------------------------------------------------------------
// Episode

/// Runs `config.rounds` rounds of every vehicle: context update, budget
/// filter, policy decision, SPS reservation, HARQ transmission, feedback,
/// reward and posterior update. Deterministic per (config, seed). Throws
/// ValidationError listing every violation for an invalid config.
MetricsLog run_episode(const ExperimentConfig& config, std::uint64_t seed);

/// Same, with an already loaded catalog (avoids re-reading the file).
MetricsLog run_episode(const ExperimentConfig& config, std::uint64_t seed,
                       const risk::BehaviorCatalog& catalog);

}  // namespace v2x::sim
