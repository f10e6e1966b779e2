#include "uplink/tcp_reno.hpp"

#include <doctest.h>

using namespace uplink;

namespace {

struct Fixture {
  ExperimentConfig config = default_config(DistanceLayout::Equal);
  TcpParams params = TcpParams::from(config);
  RandomStream rng{42};

  TcpFlowState flow(int cwnd, int ssthresh) {
    auto f = init_flow(config, rng);
    f.cwnd = cwnd;
    f.ssthresh = ssthresh;
    return f;
  }

  // Sends a full window and acknowledges it.
  DeliveryOutcome round(TcpFlowState& f, double error_prob = 0.0) {
    f.inflight = f.cwnd;
    return on_packets_delivered(f, params, f.cwnd, 0.1, rng, error_prob);
  }
};

} // namespace

TEST_CASE("flow initialisation") {
  Fixture fx;
  const auto f = init_flow(fx.config, fx.rng);
  CHECK(f.cwnd == 1);
  CHECK(f.cwnd_max == 70);
  CHECK(f.ssthresh == 35);
  CHECK(f.rto_s == doctest::Approx(0.2));
  CHECK(f.tto_s == f.rto_s);
  CHECK(f.inflight == 0);
  CHECK(f.start_offset_s >= 0.0);
  CHECK(f.start_offset_s <= fx.config.base_rtt_s);
}

TEST_CASE("slow start doubles per window") {
  Fixture fx;
  auto f = fx.flow(4, 35);
  fx.round(f);
  CHECK(f.cwnd == 8);
  CHECK(f.inflight == 0);
}

TEST_CASE("congestion avoidance adds one per window") {
  Fixture fx;
  auto f = fx.flow(10, 5);
  fx.round(f);
  CHECK(f.cwnd == 11);
}

TEST_CASE("three errored packets halve the window") {
  Fixture fx;
  auto f = fx.flow(20, 5);
  f.inflight = 3;
  const auto out = on_packets_delivered(f, fx.params, 3, 0.1, fx.rng, 1.0);
  CHECK(out.errored == 3);
  CHECK(out.clean == 0);
  CHECK(out.triple_dup_events == 1);
  CHECK(f.cwnd == 10);
  CHECK(f.ssthresh == 10);
  CHECK(f.inflight == 3); // kept for retransmission
  CHECK(f.loss_indications == 1);
  CHECK(f.dup_ack_count == 0);
}

TEST_CASE("two errored packets are not a loss indication") {
  Fixture fx;
  auto f = fx.flow(20, 5);
  f.inflight = 2;
  on_packets_delivered(f, fx.params, 2, 0.1, fx.rng, 1.0);
  CHECK(f.cwnd == 20);
  CHECK(f.dup_ack_count == 2);
  CHECK(f.loss_indications == 0);
}

TEST_CASE("timeout") {
  Fixture fx;
  auto f = fx.flow(20, 35);
  on_timeout(f, fx.params);
  CHECK(f.cwnd == 1);
  CHECK(f.ssthresh == 10);
  CHECK(f.rto_s == doctest::Approx(0.4));
  CHECK(f.tto_s == doctest::Approx(0.4));
  CHECK(f.in_backoff);
  CHECK(f.timeouts == 1);

  SUBCASE("small windows keep ssthresh at two") {
    f.cwnd = 3;
    on_timeout(f, fx.params);
    CHECK(f.ssthresh == 2);
  }
  SUBCASE("backoff is capped") {
    for (int i = 0; i < 20; ++i) {
      on_timeout(f, fx.params);
    }
    CHECK(f.rto_s == doctest::Approx(fx.params.max_backoff * 0.2));
  }
  SUBCASE("a clean ACK ends backoff") {
    f.inflight = 1;
    on_packets_delivered(f, fx.params, 1, 0.1, fx.rng, 0.0);
    CHECK_FALSE(f.in_backoff);
    CHECK(f.rto_s == doctest::Approx(0.2));
    CHECK(f.cwnd == 2);
  }
}

TEST_CASE("rtt estimate") {
  Fixture fx;
  auto f = init_flow(fx.config, fx.rng);
  update_rtt(f, fx.params, 0.2);
  CHECK(f.rtt_estimate_s == doctest::Approx(0.1125));
  CHECK(f.rto_s == doctest::Approx(0.225));
  update_rtt(f, fx.params, 0.01);
  CHECK(f.rto_s >= fx.params.rto_min_s);
  CHECK_THROWS_AS(update_rtt(f, fx.params, 0.0), ContractViolation);
  CHECK_THROWS_AS(update_rtt(f, fx.params, -1.0), ContractViolation);
}

TEST_CASE("demand") {
  Fixture fx;
  auto f = fx.flow(5, 35);
  CHECK(demand_bits(f, 8000) == 40000.0);
  f.cwnd = 0;
  CHECK(demand_bits(f, 8000) == 0.0);
}

TEST_CASE("cannot acknowledge more than inflight") {
  Fixture fx;
  auto f = fx.flow(5, 35);
  f.inflight = 2;
  CHECK_THROWS_AS(on_packets_delivered(f, fx.params, 3, 0.1, fx.rng, 0.0), ContractViolation);
  CHECK_THROWS_AS(on_packets_delivered(f, fx.params, -1, 0.1, fx.rng, 0.0), ContractViolation);
}

TEST_CASE("loss-free flow saturates at cwnd_max") {
  Fixture fx;
  auto f = init_flow(fx.config, fx.rng);
  for (int i = 0; i < 200; ++i) {
    fx.round(f);
  }
  CHECK(f.cwnd == f.cwnd_max);
  fx.round(f);
  CHECK(f.cwnd == f.cwnd_max);
}

TEST_CASE("random event streams keep the window in bounds") {
  RandomStream events(7);
  for (int trial = 0; trial < 200; ++trial) {
    Fixture fx;
    fx.config.cwnd_max = 1 + static_cast<int>(events.uniform(0.0, 120.0));
    auto f = init_flow(fx.config, fx.rng);
    const double p = events.uniform(0.0, 0.3);
    for (int step = 0; step < 300; ++step) {
      if (events.bernoulli(0.05)) {
        on_timeout(f, fx.params);
      } else {
        f.inflight = std::max(f.inflight, f.cwnd);
        const int n = 1 + static_cast<int>(events.uniform(0.0, f.inflight));
        on_packets_delivered(f, fx.params, std::min(n, f.inflight), 0.05 + events.uniform(0.0, 0.2),
                             fx.rng, p);
      }
      REQUIRE(f.cwnd >= 1);
      REQUIRE(f.cwnd <= f.cwnd_max);
      REQUIRE(f.ssthresh >= 2);
      REQUIRE(f.inflight >= 0);
      REQUIRE(f.rto_s >= fx.params.rto_min_s);
      REQUIRE(f.rto_s <= fx.params.max_backoff * fx.params.base_rto_s() + 1e-12);
      REQUIRE(f.tto_s <= f.rto_s);
    }
  }
}
