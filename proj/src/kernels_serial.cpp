// Serial reference implementations of the data-parallel kernels.

#include "v2x/kernels.hpp"

namespace v2x::kernels::detail {

std::vector<LinkCell> link_sweep_serial(std::span<const LinkPoint> points,
                                        const LinkSweepParams& params) {
  std::vector<LinkCell> cells;
  cells.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) cells.push_back(simulate_point(points[i], i, params));
  return cells;
}

std::vector<sim::MetricsLog> run_episodes_serial(std::span<const ExperimentConfig> configs,
                                                 std::span<const std::uint64_t> seeds,
                                                 const risk::BehaviorCatalog& catalog) {
  std::vector<sim::MetricsLog> logs;
  logs.reserve(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i)
    logs.push_back(sim::run_episode(configs[i], seeds[i], catalog));
  return logs;
}

}  // namespace v2x::kernels::detail
