#include "v2x/kernels.hpp"

#include "v2x/error.hpp"

namespace v2x::kernels {

namespace {
constexpr std::uint64_t kSweepStream = 0x5357;  // "SW"
}

double LinkCell::bler() const { return link::bler_estimate(errors, transmissions); }

double LinkCell::residual_bler() const { return link::bler_estimate(failed, blocks); }

double LinkCell::throughput_normalized() const {
  return link::normalized_throughput({bits_ok, max_bits, transmissions * sfs_per_harq, sfs_per_harq});
}

double LinkCell::throughput_block_normalized() const {
  return link::normalized_throughput({bits_ok, tbs_bits, transmissions * sfs_per_harq, sfs_per_harq});
}

namespace detail {

LinkCell simulate_point(const LinkPoint& point, std::size_t index, const LinkSweepParams& params) {
  LinkCell cell;
  cell.point = point;
  cell.tbs_bits = params.table.lookup(point.nprb, point.tbs_index);
  cell.max_bits = params.table.max_bits(point.nprb);
  cell.sfs_per_harq = params.sfs_per_harq;
  const auto& curve = params.model.curve(point.nprb, point.tbs_index);
  cell.bler_analytic = link::bler(curve, point.snr_db);

  Rng rng = Rng::stream(params.seed + point.replicate, index, kSweepStream);
  link::ThroughputCounters counters;
  counters.bits_per_sf_max = cell.max_bits;
  counters.sfs_per_harq = params.sfs_per_harq;
  link::HarqProcess process(params.harq_max_transmissions);
  for (std::int64_t b = 0; b < params.blocks_per_point; ++b) {
    process.reset();
    const auto result = link::harq_run(
        process,
        [&](int) {
          const auto fb = rng.bernoulli(cell.bler_analytic) ? link::Feedback::Nack : link::Feedback::Ack;
          if (fb == link::Feedback::Nack) ++cell.errors;
          return fb;
        },
        counters, cell.tbs_bits);
    cell.transmissions += result.attempts;
    if (result.state == link::HarqState::DoneFail) ++cell.failed;
  }
  cell.blocks = params.blocks_per_point;
  cell.bits_ok = counters.bits_tx_ok;
  return cell;
}

}  // namespace detail

std::vector<LinkCell> link_sweep(std::span<const LinkPoint> points, const LinkSweepParams& params,
                                 Backend backend) {
  if (params.blocks_per_point < 1) throw ConfigError("link sweep needs at least one block per point");
  return backend == Backend::Serial ? detail::link_sweep_serial(points, params)
                                    : detail::link_sweep_omp(points, params);
}

std::vector<sim::MetricsLog> run_episodes(std::span<const ExperimentConfig> configs,
                                          std::span<const std::uint64_t> seeds,
                                          const risk::BehaviorCatalog& catalog, Backend backend) {
  if (configs.size() != seeds.size()) throw ConfigError("run_episodes: one seed per config");
  for (const auto& c : configs) require_valid(c);
  return backend == Backend::Serial ? detail::run_episodes_serial(configs, seeds, catalog)
                                    : detail::run_episodes_omp(configs, seeds, catalog);
}

std::vector<sim::MetricsLog> replicate_episodes(const ExperimentConfig& config,
                                                std::span<const std::uint64_t> seeds,
                                                const risk::BehaviorCatalog& catalog,
                                                Backend backend) {
  std::vector<ExperimentConfig> configs(seeds.size(), config);
  return run_episodes(configs, seeds, catalog, backend);
}

}  // namespace v2x::kernels
