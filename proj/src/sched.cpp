#include "v2x/sched.hpp"

#include <algorithm>
#include <cmath>

#include "v2x/error.hpp"

namespace v2x::sched {

int ResourcePool::load(Resource r) const {
  auto it = occupancy.find(r);
  return it == occupancy.end() ? 0 : static_cast<int>(it->second.size());
}

void ResourcePool::occupy(Resource r, int vehicle_id) {
  if (!contains(r)) throw DomainError("resource outside the pool");
  occupancy[r].insert(vehicle_id);
}

void ResourcePool::release(int vehicle_id) {
  for (auto it = occupancy.begin(); it != occupancy.end();) {
    it->second.erase(vehicle_id);
    it = it->second.empty() ? occupancy.erase(it) : std::next(it);
  }
}

Selection sense_and_select(const ResourcePool& pool, std::span<const SciMessage> heard, Rng& rng,
                           double best_fraction) {
  if (pool.size() < 1) throw ConfigError("resource pool is empty");
  if (!(best_fraction > 0.0 && best_fraction <= 1.0))
    throw ConfigError("best_fraction must lie in (0, 1]");

  std::set<Resource> excluded;
  for (const auto& sci : heard) excluded.insert(sci.resource());

  std::vector<std::pair<int, Resource>> candidates;  // (load, resource)
  for (int sc = 0; sc < pool.subchannels; ++sc)
    for (int ph = 0; ph < pool.window_sfs; ++ph) {
      const Resource r{sc, ph};
      if (!excluded.count(r)) candidates.emplace_back(pool.load(r), r);
    }

  if (candidates.empty()) {
    const auto pick = rng.uniform_int(0, pool.size() - 1);
    return {{static_cast<int>(pick / pool.window_sfs), static_cast<int>(pick % pool.window_sfs)},
            true};
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(best_fraction * static_cast<double>(candidates.size()))));
  const int cutoff = candidates[keep - 1].first;
  std::size_t n = keep;
  while (n < candidates.size() && candidates[n].first == cutoff) ++n;

  const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(n) - 1);
  return {candidates[static_cast<std::size_t>(pick)].second, false};
}

TickResult tick_reservation(Reservation r, Rng& rng, const SpsParams& params) {
  if (r.reselection_counter < 1) throw StateError("reservation counter already exhausted");
  if (--r.reselection_counter > 0) return r;
  if (rng.bernoulli(params.p_keep)) {
    r.reselection_counter = static_cast<int>(rng.uniform_int(params.counter_min, params.counter_max));
    return r;
  }
  return ReselectionEvent{r.vehicle_id};
}

std::set<std::pair<int, int>> detect_collisions(std::span<const Reservation> reservations) {
  std::map<Resource, std::vector<int>> by_resource;
  for (const auto& r : reservations) by_resource[r.resource()].push_back(r.vehicle_id);
  std::set<std::pair<int, int>> pairs;
  for (auto& [res, ids] : by_resource) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j)
        if (ids[i] != ids[j]) pairs.insert(std::minmax(ids[i], ids[j]));
  }
  return pairs;
}

}  // namespace v2x::sched
