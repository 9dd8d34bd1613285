#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "v2x/kernels.hpp"

using namespace v2x;
using namespace v2x::kernels;

namespace {

std::vector<LinkPoint> grid() {
  std::vector<LinkPoint> pts;
  for (std::uint64_t rep = 0; rep < 2; ++rep)
    for (int nprb : {6, 20})
      for (int idx = 1; idx <= 4; ++idx)
        for (int s = -10; s <= 6; s += 2) pts.push_back({nprb, idx, static_cast<double>(s), rep});
  return pts;
}

}  // namespace

TEST_CASE("OpenMP link sweep reproduces the serial reference") {
  LinkSweepParams p;
  p.blocks_per_point = 2000;
  p.seed = 77;
  const auto pts = grid();
  const auto serial = link_sweep(pts, p, Backend::Serial);
  const auto omp = link_sweep(pts, p, Backend::OpenMP);
  REQUIRE(serial.size() == pts.size());
  CHECK(serial == omp);
  CHECK(link_sweep(pts, p, Backend::Serial) == serial);
  p.seed = 78;
  CHECK(link_sweep(pts, p, Backend::Serial) != serial);
}

TEST_CASE("link cells agree with the analytic model") {
  LinkSweepParams p;
  p.blocks_per_point = 20000;
  p.seed = 5;
  const auto cells = link_sweep(grid(), p);
  for (const auto& c : cells) {
    CAPTURE(c.point.nprb);
    CAPTURE(c.point.tbs_index);
    CAPTURE(c.point.snr_db);
    const double b = c.bler_analytic;
    CHECK(b == doctest::Approx(oracle::logistic_bler(c.point.snr_db,
                                                     p.model.curve(c.point.nprb, c.point.tbs_index).midpoint_db, 1.5)));
    CHECK(std::abs(c.bler() - b) <= 4 * oracle::binomial_sigma(b, static_cast<double>(c.transmissions)) + 1e-12);
    CHECK(std::abs(c.residual_bler() - std::pow(b, 4)) <=
          4 * oracle::binomial_sigma(std::pow(b, 4), static_cast<double>(c.blocks)) + 1e-12);
    // Every delivered block is counted once; every attempt costs sfs_per_harq subframes.
    CHECK(c.bits_ok == (c.blocks - c.failed) * c.tbs_bits);
    CHECK(c.transmissions - c.errors == c.blocks - c.failed);
    CHECK(c.throughput_normalized() ==
          doctest::Approx(static_cast<double>(c.bits_ok) / (c.max_bits * static_cast<double>(c.transmissions))));
    CHECK(c.throughput_block_normalized() ==
          doctest::Approx(static_cast<double>(c.bits_ok) / (c.tbs_bits * static_cast<double>(c.transmissions))));
  }
}

TEST_CASE("empirical BLER at the calibration midpoint") {
  LinkSweepParams p;
  p.blocks_per_point = 100000;
  p.harq_max_transmissions = 1;
  const std::vector<LinkPoint> pts{{6, 1, -6.0, 0}, {6, 4, 1.0, 0}, {20, 2, -3.0, 0}};
  for (const auto& c : link_sweep(pts, p)) CHECK(std::abs(c.bler() - 0.5) <= 0.01);
}

TEST_CASE("OpenMP episodes reproduce the serial reference") {
  ExperimentConfig c;
  c.rounds = 120;
  c.bandit.window = 50;
  c.n_vehicles = 3;
  c.reward_mode = RewardMode::HarqAck;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6};
  const auto cat = risk::default_catalog();
  const auto serial = replicate_episodes(c, seeds, cat, Backend::Serial);
  const auto omp = replicate_episodes(c, seeds, cat, Backend::OpenMP);
  REQUIRE(serial.size() == seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(serial[i].rows == omp[i].rows);
    CHECK(serial[i].summary == omp[i].summary);
    CHECK(serial[i].rows == sim::run_episode(c, seeds[i], cat).rows);
  }
}

TEST_CASE("kernel errors propagate out of the parallel region") {
  ExperimentConfig bad;
  bad.bandit.costs = {1, 1, 1, 1};
  bad.bandit.budget = 0;
  const std::vector<std::uint64_t> seeds{1, 2};
  for (auto backend : {Backend::Serial, Backend::OpenMP})
    CHECK_THROWS_AS(replicate_episodes(bad, seeds, risk::default_catalog(), backend), NoFeasibleArm);

  LinkSweepParams p;
  const std::vector<LinkPoint> missing{{6, 9, 0.0, 0}};
  for (auto backend : {Backend::Serial, Backend::OpenMP})
    CHECK_THROWS_AS(link_sweep(missing, p, backend), ConfigError);
  p.blocks_per_point = 0;
  CHECK_THROWS_AS(link_sweep({}, p), ConfigError);
}
