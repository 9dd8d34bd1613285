#include "doctest.h"

#include <cmath>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "v2x/error.hpp"
#include "v2x/link.hpp"

using namespace v2x::link;
using v2x::Rng;

TEST_CASE("standard TBS table") {
  const auto t = TbsTable::standard();
  CHECK(tbs_lookup(t, 6, 1) == 152);
  CHECK(tbs_lookup(t, 6, 4) == 1032);
  CHECK(tbs_lookup(t, 20, 2) == 1416);
  CHECK(t.max_bits(6) == 1032);
  CHECK(t.max_bits(20) == 3426);
  CHECK(t.nprbs() == std::vector<int>{6, 20});
  CHECK(t.indices(20) == std::vector<int>{1, 2, 3, 4});
  CHECK(t.validate().empty());
  CHECK_THROWS_AS(t.lookup(6, 5), v2x::ConfigError);
  CHECK_THROWS_AS(t.lookup(7, 1), v2x::ConfigError);
  CHECK_THROWS_AS(t.max_bits(50), v2x::ConfigError);

  const TbsTable bad({{{6, 1}, 300}, {{6, 2}, 200}, {{6, 3}, -1}});
  CHECK(bad.validate().size() == 3);
}

TEST_CASE("BLER curve shape") {
  const auto m = BlerModel::standard();
  CHECK(m.validate().empty());
  for (const auto& [key, c] : m.entries()) {
    CHECK(bler(c, c.midpoint_db) == 0.5);
    CHECK(bler(c, c.midpoint_db + 60) < 1e-30);
    CHECK(bler(c, c.midpoint_db - 60) == doctest::Approx(1.0));
  }
  // Analytic values computed independently.
  CHECK(bler(m, 6, 1, -2) == doctest::Approx(0.0024726231566347743).epsilon(1e-12));
  CHECK(bler(m, 6, 2, -2) == doctest::Approx(0.04742587317756678).epsilon(1e-12));
  CHECK(bler(m, 6, 3, -2) == doctest::Approx(0.8175744761936437).epsilon(1e-12));
  CHECK(bler(m, 6, 4, -2) == doctest::Approx(0.9890130573694068).epsilon(1e-12));
  CHECK(bler(m, 20, 3, 0.5) == doctest::Approx(0.320821300824607).epsilon(1e-12));
  CHECK_THROWS_AS(m.curve(6, 9), v2x::ConfigError);

  const BlerModel bad({{{6, 1}, {0.0, 1.0}}, {{6, 2}, {-1.0, 0.0}}});
  CHECK(bad.validate().size() == 2);
}

TEST_CASE("BLER is strictly decreasing in SNR and increasing in TBS index") {
  const auto m = BlerModel::standard();
  for (int nprb : {6, 20}) {
    for (int idx = 1; idx <= 4; ++idx) {
      double prev = 2.0;
      for (int k = -200; k <= 200; ++k) {
        const double s = 0.1 * k;
        const double b = bler(m, nprb, idx, s);
        REQUIRE(b < prev);
        REQUIRE(b > 0.0);
        REQUIRE(b < 1.0);
        REQUIRE(b == doctest::Approx(oracle::logistic_bler(s, m.curve(nprb, idx).midpoint_db, 1.5)));
        prev = b;
      }
    }
    for (int k = -100; k <= 100; ++k)
      for (int idx = 2; idx <= 4; ++idx)
        REQUIRE(bler(m, nprb, idx, 0.1 * k) > bler(m, nprb, idx - 1, 0.1 * k));
  }
}

TEST_CASE("transmit_block draws NACK with the BLER probability") {
  const auto m = BlerModel::standard();
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    CHECK(transmit_block(m, 6, 1, 60.0, rng) == Feedback::Ack);
    CHECK(transmit_block(m, 6, 4, -60.0, rng) == Feedback::Nack);
  }
  int nacks = 0;
  for (int i = 0; i < 100000; ++i) nacks += transmit_block(m, 6, 2, -4.0, rng) == Feedback::Nack;
  CHECK(std::abs(nacks / 100000.0 - 0.5) <= 0.01);

  for (double s : {-7.0, -5.0, -3.0}) {
    const double p = bler(m, 6, 2, s);
    const int n = 20000;
    int e = 0;
    for (int i = 0; i < n; ++i) e += transmit_block(m, 6, 2, s, rng) == Feedback::Nack;
    CHECK(std::abs(bler_estimate(e, n) - p) <= 3 * oracle::binomial_sigma(p, n));
  }
}

TEST_CASE("HARQ state machine") {
  HarqProcess p(4);
  CHECK(p.state() == HarqState::Idle);
  CHECK_THROWS_AS(p.on_feedback(Feedback::Ack), v2x::StateError);
  p.transmit();
  CHECK(p.state() == HarqState::AwaitingFeedback);
  CHECK_THROWS_AS(p.transmit(), v2x::StateError);
  p.on_feedback(Feedback::Ack);
  CHECK(p.state() == HarqState::DoneAck);
  CHECK(p.attempts() == 1);
  CHECK_THROWS_AS(p.transmit(), v2x::StateError);
  p.reset();
  CHECK(p.state() == HarqState::Idle);
  CHECK_THROWS_AS(HarqProcess(0), v2x::ConfigError);
}

TEST_CASE("harq_run accounting") {
  ThroughputCounters c;
  c.sfs_per_harq = 2;
  HarqProcess p(4);
  auto r = harq_run(p, [](int) { return Feedback::Ack; }, c, 328);
  CHECK(r == HarqResult{HarqState::DoneAck, 1});
  CHECK(c.bits_tx_ok == 328);
  CHECK(c.sfs_observed == 2);
  CHECK_THROWS_AS(harq_run(p, [](int) { return Feedback::Ack; }, c, 328), v2x::StateError);

  p.reset();
  r = harq_run(p, [](int) { return Feedback::Nack; }, c, 328);
  CHECK(r == HarqResult{HarqState::DoneFail, 4});
  CHECK(c.bits_tx_ok == 328);
  CHECK(c.sfs_observed == 10);

  p.reset();
  std::vector<int> seen;
  r = harq_run(
      p,
      [&](int attempt) {
        seen.push_back(attempt);
        return attempt == 3 ? Feedback::Ack : Feedback::Nack;
      },
      c, 100);
  CHECK(r == HarqResult{HarqState::DoneAck, 3});
  CHECK(seen == std::vector<int>{1, 2, 3});
  CHECK(c.bits_tx_ok == 428);
}

TEST_CASE("HARQ failure rate matches (1 - p)^4") {
  Rng rng(13);
  const int n = 100000;
  int fails = 0;
  ThroughputCounters c;
  for (int i = 0; i < n; ++i) {
    HarqProcess p(4);
    const auto r = harq_run(
        p, [&](int) { return rng.bernoulli(0.5) ? Feedback::Ack : Feedback::Nack; }, c, 1);
    fails += r.state == HarqState::DoneFail;
  }
  CHECK(std::abs(fails / double(n) - 0.0625) <= 0.005);
}

TEST_CASE("normalized throughput") {
  CHECK(normalized_throughput({4800, 1032, 10, 2}) == doctest::Approx(4800.0 / (1032 * 5)));
  CHECK(normalized_throughput({0, 1032, 10, 2}) == 0.0);
  CHECK(normalized_throughput({100, 100, 3, 2}) == 1.0);
  CHECK_THROWS_AS(normalized_throughput({1, 100, 1, 2}), v2x::MetricError);
  CHECK_THROWS_WITH(normalized_throughput({1, 100, 1, 2}),
                    doctest::Contains("shorter than one HARQ period"));
  CHECK_THROWS_AS(normalized_throughput({1, 0, 4, 2}), v2x::MetricError);

  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    const ThroughputCounters c{rng.uniform_int(0, 1 << 20), rng.uniform_int(1, 4000),
                               rng.uniform_int(4, 1000), rng.uniform_int(1, 4)};
    ThroughputCounters d = c;
    d.bits_tx_ok *= 2;
    d.bits_per_sf_max *= 2;
    CHECK(normalized_throughput(c) == doctest::Approx(normalized_throughput(d)).epsilon(1e-15));
  }
}

TEST_CASE("BLER estimate") {
  CHECK(bler_estimate(0, 100) == 0.0);
  CHECK(bler_estimate(100, 100) == 1.0);
  CHECK(bler_estimate(37, 200) == 0.185);
  CHECK_THROWS_AS(bler_estimate(0, 0), v2x::MetricError);
}

TEST_CASE("AR(1) SNR process") {
  Rng rng(15);
  double s = 4.0;
  for (int i = 0; i < 100; ++i) {
    s = snr_evolve(s, rng, {-2.0, 0.0, 0.0});
    CHECK(s == -2.0);
  }
  s = 10.0;
  for (int i = 1; i <= 10; ++i) {
    s = snr_evolve(s, rng, {2.0, 0.0, 0.5});
    CHECK(s == doctest::Approx(2.0 + 8.0 * std::pow(0.5, i)));
  }
  CHECK_THROWS_AS(snr_evolve(0, rng, {0, 1, 1.0}), v2x::DomainError);
  CHECK_THROWS_AS(snr_evolve(0, rng, {0, 1, -0.1}), v2x::DomainError);

  const int n = 1000000;
  const SnrProcess p{-2.0, 3.0, 0.9};
  std::vector<double> x(n);
  x[0] = p.mean_db;
  for (int i = 1; i < n; ++i) x[i] = snr_evolve(x[i - 1], rng, p);
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  double c0 = 0, c1 = 0;
  for (int i = 0; i < n; ++i) {
    c0 += (x[i] - mean) * (x[i] - mean);
    if (i > 0) c1 += (x[i] - mean) * (x[i - 1] - mean);
  }
  CHECK(std::abs(mean - p.mean_db) < 0.1);
  CHECK(std::abs(c1 / c0 - 0.9) < 0.02);
  CHECK(std::sqrt(c0 / n) == doctest::Approx(3.0).epsilon(0.02));
}
