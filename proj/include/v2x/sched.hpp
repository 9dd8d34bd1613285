#pragma once

#include <compare>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "v2x/rng.hpp"

namespace v2x::sched {

/// One schedulable unit: a subchannel at a subframe phase of the
/// reservation interval.
struct Resource {
  int subchannel = 0;
  int phase = 0;
  auto operator<=>(const Resource&) const = default;
};

/// Resource grid plus the sensed load on each resource.
struct ResourcePool {
  int subchannels = 1;
  int window_sfs = 1;
  std::map<Resource, std::set<int>> occupancy;  // resource -> vehicle ids sensed on it

  int size() const { return subchannels * window_sfs; }
  bool contains(Resource r) const {
    return r.subchannel >= 0 && r.subchannel < subchannels && r.phase >= 0 && r.phase < window_sfs;
  }
  /// Number of vehicles sensed on r.
  int load(Resource r) const;
  void occupy(Resource r, int vehicle_id);
  void release(int vehicle_id);
};

struct Reservation {
  int vehicle_id = 0;
  int subchannel = 0;
  int subframe_phase = 0;
  int interval_sfs = 100;
  int reselection_counter = 1;

  Resource resource() const { return {subchannel, subframe_phase}; }
  bool operator==(const Reservation&) const = default;
};

/// Control message announcing the sender's live reservation.
struct SciMessage {
  int vehicle_id = 0;
  int subchannel = 0;
  int subframe_phase = 0;
  int interval_sfs = 100;
  int reselection_counter = 1;

  static SciMessage announce(const Reservation& r) {
    return {r.vehicle_id, r.subchannel, r.subframe_phase, r.interval_sfs, r.reselection_counter};
  }
  Resource resource() const { return {subchannel, subframe_phase}; }
};

struct SpsParams {
  int counter_min = 5;
  int counter_max = 15;
  double p_keep = 0.8;
  double best_fraction = 0.2;
  int interval_sfs = 100;
  bool operator==(const SpsParams&) const = default;
};

struct Selection {
  Resource resource;
  bool congested = false;  // every resource was excluded; collision accepted
};

/// Excludes resources announced in `heard`, ranks the rest by sensed load and
/// picks uniformly among the best `best_fraction` (at least one, ties at the
/// cut-off included). Falls back to a uniform pick over the whole pool, with
/// `congested` set, when nothing is left.
Selection sense_and_select(const ResourcePool& pool, std::span<const SciMessage> heard, Rng& rng,
                           double best_fraction = 0.2);

struct ReselectionEvent {
  int vehicle_id = 0;
  bool operator==(const ReselectionEvent&) const = default;
};

using TickResult = std::variant<Reservation, ReselectionEvent>;

/// Consumes one transmission opportunity. At zero the reservation is kept with
/// probability p_keep (counter redrawn uniformly from [counter_min,
/// counter_max]); otherwise a reselection is signalled.
TickResult tick_reservation(Reservation r, Rng& rng, const SpsParams& params);

/// Unordered vehicle-id pairs (lower id first) sharing a resource.
std::set<std::pair<int, int>> detect_collisions(std::span<const Reservation> reservations);

}  // namespace v2x::sched
