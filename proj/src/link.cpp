#include "v2x/link.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace v2x::link {

TbsTable TbsTable::standard() {
  return TbsTable({{{6, 1}, 152},
                   {{6, 2}, 328},
                   {{6, 3}, 712},
                   {{6, 4}, 1032},
                   {{20, 1}, 536},
                   {{20, 2}, 1416},
                   {{20, 3}, 2472},
                   {{20, 4}, 3426}});
}

int TbsTable::lookup(int nprb, int index) const {
  auto it = bits_.find({nprb, index});
  if (it == bits_.end())
    throw ConfigError(fmt::format("TBS table has no entry for NPRB {} index {}", nprb, index));
  return it->second;
}

std::vector<int> TbsTable::nprbs() const {
  std::vector<int> out;
  for (const auto& [key, bits] : bits_)
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  return out;
}

std::vector<int> TbsTable::indices(int nprb) const {
  std::vector<int> out;
  for (const auto& [key, bits] : bits_)
    if (key.first == nprb) out.push_back(key.second);
  return out;
}

int TbsTable::max_bits(int nprb) const {
  int best = 0;
  for (const auto& [key, bits] : bits_)
    if (key.first == nprb) best = std::max(best, bits);
  if (best == 0) throw ConfigError(fmt::format("TBS table has no entries for NPRB {}", nprb));
  return best;
}

std::vector<std::string> TbsTable::validate() const {
  std::vector<std::string> errors;
  if (bits_.empty()) errors.push_back("TBS table is empty");
  const std::pair<int, int>* prev_key = nullptr;
  int prev_bits = 0;
  for (const auto& [key, bits] : bits_) {
    if (key.first < 1 || key.second < 1)
      errors.push_back(fmt::format("TBS table key ({}, {}) must be positive", key.first, key.second));
    if (bits <= 0)
      errors.push_back(fmt::format("TBS for NPRB {} index {} must be positive", key.first, key.second));
    if (prev_key && prev_key->first == key.first && bits <= prev_bits)
      errors.push_back(fmt::format("TBS for NPRB {} not strictly increasing at index {}", key.first,
                                   key.second));
    prev_key = &key;
    prev_bits = bits;
  }
  return errors;
}

BlerModel BlerModel::standard() {
  constexpr double kSlope = 1.5;
  return BlerModel({{{6, 1}, {-6.0, kSlope}},
                    {{6, 2}, {-4.0, kSlope}},
                    {{6, 3}, {-1.0, kSlope}},
                    {{6, 4}, {1.0, kSlope}},
                    {{20, 1}, {-7.0, kSlope}},
                    {{20, 2}, {-3.0, kSlope}},
                    {{20, 3}, {0.0, kSlope}},
                    {{20, 4}, {2.0, kSlope}}});
}

const BlerCurve& BlerModel::curve(int nprb, int index) const {
  auto it = curves_.find({nprb, index});
  if (it == curves_.end())
    throw ConfigError(fmt::format("BLER model has no curve for NPRB {} index {}", nprb, index));
  return it->second;
}

std::vector<std::string> BlerModel::validate() const {
  std::vector<std::string> errors;
  if (curves_.empty()) errors.push_back("BLER model is empty");
  const std::pair<int, int>* prev_key = nullptr;
  double prev_mid = 0.0;
  for (const auto& [key, c] : curves_) {
    if (!(c.slope > 0.0))
      errors.push_back(fmt::format("BLER slope for NPRB {} index {} must be positive", key.first,
                                   key.second));
    if (!std::isfinite(c.midpoint_db))
      errors.push_back(fmt::format("BLER midpoint for NPRB {} index {} must be finite", key.first,
                                   key.second));
    if (prev_key && prev_key->first == key.first && !(c.midpoint_db > prev_mid))
      errors.push_back(fmt::format("BLER midpoint for NPRB {} not strictly increasing at index {}",
                                   key.first, key.second));
    prev_key = &key;
    prev_mid = c.midpoint_db;
  }
  return errors;
}

double bler(const BlerCurve& curve, double snr_db) {
  return 1.0 / (1.0 + std::exp(curve.slope * (snr_db - curve.midpoint_db)));
}

double bler(const BlerModel& model, int nprb, int index, double snr_db) {
  return bler(model.curve(nprb, index), snr_db);
}

Feedback transmit_block(const BlerModel& model, int nprb, int index, double snr_db, Rng& rng) {
  return rng.bernoulli(bler(model, nprb, index, snr_db)) ? Feedback::Nack : Feedback::Ack;
}

HarqProcess::HarqProcess(int max_transmissions) : max_transmissions_(max_transmissions) {
  if (max_transmissions < 1) throw ConfigError("HARQ needs at least one transmission");
}

void HarqProcess::transmit() {
  if (state_ == HarqState::DoneAck || state_ == HarqState::DoneFail)
    throw StateError("HARQ process already finished");
  if (outstanding_) throw StateError("HARQ process is waiting for feedback");
  ++attempts_;
  outstanding_ = true;
  state_ = HarqState::AwaitingFeedback;
}

void HarqProcess::on_feedback(Feedback fb) {
  if (!outstanding_) throw StateError("HARQ feedback without an outstanding transmission");
  outstanding_ = false;
  if (fb == Feedback::Ack)
    state_ = HarqState::DoneAck;
  else if (attempts_ >= max_transmissions_)
    state_ = HarqState::DoneFail;
}

void HarqProcess::reset() {
  attempts_ = 0;
  outstanding_ = false;
  state_ = HarqState::Idle;
}

double normalized_throughput(const ThroughputCounters& c) {
  if (c.bits_per_sf_max <= 0 || c.sfs_per_harq <= 0)
    throw MetricError("throughput counters need positive bits_per_sf_max and sfs_per_harq");
  const std::int64_t periods = c.sfs_observed / c.sfs_per_harq;
  if (periods < 1) throw MetricError("observation window shorter than one HARQ period");
  return static_cast<double>(c.bits_tx_ok) /
         (static_cast<double>(c.bits_per_sf_max) * static_cast<double>(periods));
}

double bler_estimate(std::int64_t blocks_err, std::int64_t blocks_total) {
  if (blocks_total < 1) throw MetricError("BLER undefined: no blocks sent");
  return static_cast<double>(blocks_err) / static_cast<double>(blocks_total);
}

double snr_evolve(double state, Rng& rng, const SnrProcess& p) {
  if (!(p.correlation >= 0.0 && p.correlation < 1.0))
    throw DomainError("snr_evolve: correlation must lie in [0, 1)");
  const double innovation = p.stddev_db * std::sqrt(1.0 - p.correlation * p.correlation);
  // Always consume one normal draw so the stream advances identically.
  const double z = rng.normal();
  return p.mean_db + p.correlation * (state - p.mean_db) + innovation * z;
}

}  // namespace v2x::link
