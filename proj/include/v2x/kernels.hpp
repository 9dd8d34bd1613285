#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/link.hpp"
#include "v2x/risk.hpp"
#include "v2x/sim.hpp"

namespace v2x::kernels {

/// Serial is the reference; OpenMP must reproduce it exactly. Every work item
/// draws from its own Rng stream, so results do not depend on thread count.
enum class Backend { Serial, OpenMP };

bool openmp_available();

/// One Monte-Carlo grid point of the link abstraction.
struct LinkPoint {
  int nprb = 6;
  int tbs_index = 1;
  double snr_db = 0.0;
  std::uint64_t replicate = 0;

  bool operator==(const LinkPoint&) const = default;
};

struct LinkCell {
  LinkPoint point;
  int tbs_bits = 0;
  int max_bits = 0;            // largest TBS at this NPRB
  std::int64_t blocks = 0;     // HARQ processes
  std::int64_t transmissions = 0;
  std::int64_t errors = 0;     // NACKed transmissions
  std::int64_t failed = 0;     // processes that exhausted HARQ
  std::int64_t bits_ok = 0;
  int sfs_per_harq = 2;
  double bler_analytic = 0.0;

  double bler() const;
  double residual_bler() const;
  /// Delivered bits over the largest block the NPRB can carry, per HARQ period.
  double throughput_normalized() const;
  /// Same, relative to this cell's own block size.
  double throughput_block_normalized() const;

  bool operator==(const LinkCell&) const = default;
};

struct LinkSweepParams {
  link::BlerModel model = link::BlerModel::standard();
  link::TbsTable table = link::TbsTable::standard();
  std::int64_t blocks_per_point = 10000;
  int harq_max_transmissions = 4;
  int sfs_per_harq = 2;
  std::uint64_t seed = 0;
};

/// Sends blocks_per_point HARQ-protected blocks at every point. Point i uses
/// Rng::stream(seed + replicate, i).
std::vector<LinkCell> link_sweep(std::span<const LinkPoint> points, const LinkSweepParams& params,
                                 Backend backend = Backend::OpenMP);

/// One episode per seed.
std::vector<sim::MetricsLog> replicate_episodes(const ExperimentConfig& config,
                                                std::span<const std::uint64_t> seeds,
                                                const risk::BehaviorCatalog& catalog,
                                                Backend backend = Backend::OpenMP);

/// One episode per config (same seed index i used for configs[i] and seeds[i]).
std::vector<sim::MetricsLog> run_episodes(std::span<const ExperimentConfig> configs,
                                          std::span<const std::uint64_t> seeds,
                                          const risk::BehaviorCatalog& catalog,
                                          Backend backend = Backend::OpenMP);

namespace detail {

LinkCell simulate_point(const LinkPoint& point, std::size_t index, const LinkSweepParams& params);

std::vector<LinkCell> link_sweep_serial(std::span<const LinkPoint> points,
                                        const LinkSweepParams& params);
std::vector<LinkCell> link_sweep_omp(std::span<const LinkPoint> points,
                                     const LinkSweepParams& params);

std::vector<sim::MetricsLog> run_episodes_serial(std::span<const ExperimentConfig> configs,
                                                 std::span<const std::uint64_t> seeds,
                                                 const risk::BehaviorCatalog& catalog);
std::vector<sim::MetricsLog> run_episodes_omp(std::span<const ExperimentConfig> configs,
                                              std::span<const std::uint64_t> seeds,
                                              const risk::BehaviorCatalog& catalog);

}  // namespace detail

}  // namespace v2x::kernels
