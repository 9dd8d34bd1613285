#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "v2x/error.hpp"
#include "v2x/rng.hpp"

namespace v2x::link {

/// (NPRB, TBS index) -> transport block size in bits.
class TbsTable {
public:
  using Key = std::pair<int, int>;

  TbsTable() = default;
  explicit TbsTable(std::map<Key, int> bits) : bits_(std::move(bits)) {}

  /// NPRB 6: {152, 328, 712, 1032}; NPRB 20: {536, 1416, 2472, 3426}.
  static TbsTable standard();

  /// Throws ConfigError for a missing (nprb, index).
  int lookup(int nprb, int index) const;
  bool contains(int nprb, int index) const { return bits_.count({nprb, index}) != 0; }
  std::vector<int> nprbs() const;
  /// TBS indices declared for one NPRB, ascending.
  std::vector<int> indices(int nprb) const;
  int max_bits(int nprb) const;
  const std::map<Key, int>& entries() const { return bits_; }

  /// Positive sizes, strictly increasing in index for every NPRB.
  std::vector<std::string> validate() const;

  bool operator==(const TbsTable&) const = default;

private:
  std::map<Key, int> bits_;
};

inline int tbs_lookup(const TbsTable& table, int nprb, int index) {
  return table.lookup(nprb, index);
}

/// Logistic waterfall of one (NPRB, TBS index): BLER = 0.5 at midpoint_db.
struct BlerCurve {
  double midpoint_db = 0.0;
  double slope = 1.0;  // per dB
  bool operator==(const BlerCurve&) const = default;
};

class BlerModel {
public:
  using Key = std::pair<int, int>;

  BlerModel() = default;
  explicit BlerModel(std::map<Key, BlerCurve> curves) : curves_(std::move(curves)) {}

  /// Default calibration: NPRB 6 midpoints (-6, -4, -1, 1) dB, NPRB 20
  /// midpoints (-7, -3, 0, 2) dB, slope 1.5 per dB.
  static BlerModel standard();

  const BlerCurve& curve(int nprb, int index) const;
  bool contains(int nprb, int index) const { return curves_.count({nprb, index}) != 0; }
  const std::map<Key, BlerCurve>& entries() const { return curves_; }

  /// Positive slopes, midpoints strictly increasing in index for every NPRB.
  std::vector<std::string> validate() const;

  bool operator==(const BlerModel&) const = default;

private:
  std::map<Key, BlerCurve> curves_;
};

/// 1 / (1 + exp(slope * (snr_db - midpoint_db))).
double bler(const BlerModel& model, int nprb, int index, double snr_db);
double bler(const BlerCurve& curve, double snr_db);

enum class Feedback { Ack, Nack };

/// One block over the abstracted channel: Nack with probability bler.
Feedback transmit_block(const BlerModel& model, int nprb, int index, double snr_db, Rng& rng);

enum class HarqState { Idle, AwaitingFeedback, DoneAck, DoneFail };

/// Stop-and-wait HARQ process with independent attempts.
class HarqProcess {
public:
  explicit HarqProcess(int max_transmissions = 4);

  /// Sends the next attempt. Throws StateError if finished or still waiting.
  void transmit();
  /// Applies feedback for the outstanding attempt.
  void on_feedback(Feedback fb);
  /// Back to Idle for the next block.
  void reset();

  HarqState state() const { return state_; }
  int attempts() const { return attempts_; }
  int max_transmissions() const { return max_transmissions_; }

private:
  int max_transmissions_;
  int attempts_ = 0;
  bool outstanding_ = false;
  HarqState state_ = HarqState::Idle;
};

/// Counters of the normalized throughput metric.
struct ThroughputCounters {
  std::int64_t bits_tx_ok = 0;       // delivered (ACKed) bits
  std::int64_t bits_per_sf_max = 1;  // bits one subframe can carry
  std::int64_t sfs_observed = 0;
  std::int64_t sfs_per_harq = 2;     // subframes between HARQ processes
};

struct HarqResult {
  HarqState state = HarqState::Idle;
  int attempts = 0;
  bool operator==(const HarqResult&) const = default;
};

/// Runs an idle process to completion. `outcome(attempt)` yields the feedback
/// of 1-based attempt number `attempt`. Every attempt adds sfs_per_harq to
/// sfs_observed; an ACK adds tbs_bits to bits_tx_ok.
template <typename OutcomeSource>
HarqResult harq_run(HarqProcess& process, OutcomeSource&& outcome, ThroughputCounters& counters,
                    std::int64_t tbs_bits) {
  if (process.state() != HarqState::Idle) throw StateError("harq_run: process is not idle");
  while (process.state() != HarqState::DoneAck && process.state() != HarqState::DoneFail) {
    process.transmit();
    counters.sfs_observed += counters.sfs_per_harq;
    process.on_feedback(outcome(process.attempts()));
  }
  if (process.state() == HarqState::DoneAck) counters.bits_tx_ok += tbs_bits;
  return {process.state(), process.attempts()};
}

/// bits_tx_ok / (bits_per_sf_max * floor(sfs_observed / sfs_per_harq)).
/// Throws MetricError when the floor term is zero.
double normalized_throughput(const ThroughputCounters& c);

/// blocks_err / blocks_total; throws MetricError when blocks_total is zero.
double bler_estimate(std::int64_t blocks_err, std::int64_t blocks_total);

/// Stationary AR(1) SNR process standing in for a fading channel.
struct SnrProcess {
  double mean_db = 0.0;
  double stddev_db = 0.0;
  double correlation = 0.0;  // in [0, 1)
  bool operator==(const SnrProcess&) const = default;
};

/// mean + rho (state - mean) + stddev sqrt(1 - rho^2) N(0, 1).
double snr_evolve(double state, Rng& rng, const SnrProcess& p);

}  // namespace v2x::link
