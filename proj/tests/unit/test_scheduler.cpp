#include "uplink/scheduler.hpp"
#include "uplink/rng.hpp"
#include "uplink/tcp_reno.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace uplink;

namespace {

const ModulationTable& table() {
  static const ModulationTable t = build_table(25e6, 1e-6);
  return t;
}

SchedulerSetup setup(SchedulerKind kind) {
  SchedulerSetup s;
  s.kind = kind;
  return s;
}

std::vector<PollReport> uniform_reports(std::size_t n, int cwnd = 70) {
  return std::vector<PollReport>(n, PollReport{cwnd, 0.2, 0.1, 0.2});
}

// Two active stations with hand-set scheduling inputs.
SchedulerState pair(SchedulerKind kind, double d1, double r1, double dc1, double dl1, double d2, double r2,
                    double dc2, double dl2) {
  SchedulerState s(setup(kind), 2);
  const double in[2][4] = {{d1, r1, dc1, dl1}, {d2, r2, dc2, dl2}};
  for (int i = 0; i < 2; ++i) {
    auto& st = s.stations[i];
    st.schedulable = st.active = true;
    st.demand_bits = in[i][0];
    st.rate_bps = in[i][1];
    st.scaled_deficit = in[i][2];
    st.deadline_s = in[i][3];
  }
  s.num_schedulable = 2;
  return s;
}

void served(StationSchedule& st, int slots, double rate) {
  st.flag = slots > 0 ? 1 : 0;
  st.slots = slots;
  st.rate_bps = rate;
}

} // namespace

TEST_CASE("polling opens an epoch") {
  SchedulerState s(setup(SchedulerKind::TWUSA));
  const auto reports = uniform_reports(10);
  const std::vector<double> snr(10, 30.0);
  begin_epoch(s, reports, snr, table());
  CHECK(s.num_schedulable == 10);
  CHECK(s.quantum_bits == doctest::Approx(4000.0));
  CHECK(s.epoch_frames == 50);
  CHECK(s.frame_in_epoch == 0);
  for (const auto& st : s.stations) {
    CHECK(st.demand_bits == 560000.0);
    CHECK(st.deadline_s == 1.0); // no deadlines for TWUS
  }

  SUBCASE("zero window is not schedulable") {
    auto r = reports;
    r[3].cwnd = 0;
    begin_epoch(s, r, snr, table());
    CHECK_FALSE(s.stations[3].schedulable);
    CHECK(s.stations[3].demand_bits == 0.0);
    CHECK(s.num_schedulable == 9);
  }
  SUBCASE("outage at poll time is not schedulable") {
    auto low = snr;
    low[0] = 12.0;
    begin_epoch(s, reports, low, table());
    CHECK_FALSE(s.stations[0].schedulable);
  }
  SUBCASE("deadlines start at the reported time to timeout") {
    SchedulerState d(setup(SchedulerKind::DTWUSA));
    auto r = reports;
    r[1].tto_s = 0.05;
    begin_epoch(d, r, snr, table());
    CHECK(d.stations[1].deadline_s == 0.05);
    CHECK(d.stations[1].timeout_s == 0.2);
  }
  SUBCASE("contract violations") {
    CHECK_THROWS_AS(begin_epoch(s, {}, {}, table()), ContractViolation);
    CHECK_THROWS_AS(begin_epoch(s, reports, std::vector<double>(9, 30.0), table()), ContractViolation);
    CHECK_THROWS_AS(frame_active_set(s, std::vector<double>(3, 30.0), table()), ContractViolation);
  }
}

TEST_CASE("epoch length") {
  CHECK(epoch_length_frames(0.1, 2e-3) == 50);
  CHECK(epoch_length_frames(0.1001, 2e-3) == 51);
  CHECK(epoch_length_frames(1e-4, 2e-3) == 1);
}

TEST_CASE("active set") {
  SchedulerState s(setup(SchedulerKind::TWUSA));
  begin_epoch(s, uniform_reports(3), std::vector<double>(3, 30.0), table());
  s.stations[1].demand_bits = 0.0;
  frame_active_set(s, std::vector<double>{30.0, 30.0, 12.0}, table());
  CHECK(s.stations[0].active);
  CHECK(s.stations[0].rate_bps == 120e6);
  CHECK_FALSE(s.stations[1].active); // fully served
  CHECK_FALSE(s.stations[2].active); // below 12.18 dB
  CHECK(s.stations[2].schedulable);
}

TEST_CASE("demand update") {
  SchedulerState s(setup(SchedulerKind::TWUSA), 3);
  for (auto& st : s.stations) {
    st.demand_bits = 560000.0;
  }
  served(s.stations[0], 100, 40e6);
  s.stations[1].slots = 100; // flag stays 0
  s.stations[1].rate_bps = 40e6;
  served(s.stations[2], 500, 120e6);
  s.stations[2].demand_bits = 1000.0;
  update_demand(s);
  CHECK(s.stations[0].demand_bits == doctest::Approx(552000.0));
  CHECK(s.stations[1].demand_bits == 560000.0);
  CHECK(s.stations[2].demand_bits == 0.0);
}

TEST_CASE("quantum update") {
  SchedulerState s(setup(SchedulerKind::TWUSA), 10);
  for (auto& st : s.stations) {
    st.schedulable = true;
  }
  s.num_schedulable = 10;
  update_quantum(s);
  CHECK(s.quantum_bits == 0.0);
  served(s.stations[0], 50, 40e6); // 4000 bits
  served(s.stations[1], 50, 40e6);
  update_quantum(s);
  CHECK(s.quantum_bits == doctest::Approx(800.0));
  for (auto& st : s.stations) {
    served(st, 25, 40e6);
  }
  update_quantum(s);
  CHECK(s.quantum_bits == doctest::Approx(2000.0));
}

TEST_CASE("deficit update") {
  SchedulerState s(setup(SchedulerKind::TWUSA), 2);
  for (auto& st : s.stations) {
    st.schedulable = true;
    st.deficit_bits = 0.0;
  }
  s.num_schedulable = 2;

  update_quantum(s);
  update_deficits(s);
  CHECK(s.stations[0].deficit_bits == 0.0);
  CHECK(s.stations[1].deficit_bits == 0.0);

  served(s.stations[0], 10, 50e6); // 1000 bits
  update_quantum(s);
  CHECK(s.quantum_bits == doctest::Approx(500.0));
  update_deficits(s);
  CHECK(s.stations[0].deficit_bits == doctest::Approx(-500.0));
  CHECK(s.stations[1].deficit_bits == doctest::Approx(500.0));

  SUBCASE("pseudocode form credits the previous quantum") {
    s.setup.deficit_form = DeficitForm::Pseudocode;
    served(s.stations[0], 0, 50e6);
    update_quantum(s); // Q(n) = 0, Q(n-1) = 500
    update_deficits(s);
    CHECK(s.stations[0].deficit_bits == doctest::Approx(0.0));
    CHECK(s.stations[1].deficit_bits == doctest::Approx(1000.0));
  }
}

TEST_CASE("deficit scaling") {
  SchedulerState s(setup(SchedulerKind::TWUSA), 3);
  s.stations[0].active = s.stations[1].active = true;
  s.stations[0].deficit_bits = -3.0;
  s.stations[1].deficit_bits = 5.0;
  s.stations[2].deficit_bits = -100.0; // inactive, ignored
  scale_deficits(s);
  CHECK(s.stations[0].scaled_deficit == 0.0);
  CHECK(s.stations[1].scaled_deficit == 8.0);
  CHECK(s.stations[2].scaled_deficit == 0.0);
}

TEST_CASE("deadline update") {
  SchedulerState s(setup(SchedulerKind::DTWUSA), 4);
  for (auto& st : s.stations) {
    st.schedulable = true;
    st.timeout_s = 0.3;
  }
  s.stations[0].active = true;
  s.stations[0].deadline_s = 0.010;
  s.stations[1].deadline_s = 0.010;
  s.stations[2].deadline_s = 0.001;
  s.stations[3].schedulable = false;
  s.stations[3].deadline_s = 0.010;
  update_deadlines(s);
  CHECK(s.stations[0].deadline_s == 0.010);
  CHECK(s.stations[1].deadline_s == doctest::Approx(0.008));
  CHECK(s.stations[2].deadline_s == 0.3);
  CHECK(s.stations[3].deadline_s == 0.010);

  s.setup.kind = SchedulerKind::TWUSA;
  update_deadlines(s);
  for (const auto& st : s.stations) {
    CHECK(st.deadline_s == 1.0);
  }
}

TEST_CASE("weights") {
  SUBCASE("symmetric") {
    auto s = pair(SchedulerKind::TWUSA, 8e5, 40e6, 2, 1, 8e5, 40e6, 2, 1);
    compute_weights(s);
    CHECK(s.stations[0].weight == doctest::Approx(0.5));
    CHECK(s.stations[1].weight == doctest::Approx(0.5));
  }
  SUBCASE("rate enters squared") {
    auto s = pair(SchedulerKind::TWUSA, 8e5, 40e6, 2, 1, 8e5, 80e6, 2, 1);
    compute_weights(s);
    CHECK(s.stations[0].weight == doctest::Approx(0.8));
    CHECK(s.stations[1].weight == doctest::Approx(0.2));
  }
  SUBCASE("shorter deadline wins") {
    auto s = pair(SchedulerKind::DTWUSA, 8e5, 40e6, 2, 0.1, 8e5, 40e6, 2, 0.2);
    compute_weights(s);
    CHECK(s.stations[0].weight == doctest::Approx(2.0 / 3.0));
    CHECK(s.stations[1].weight == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("deadlines are ignored without deadline scheduling") {
    auto s = pair(SchedulerKind::TWUSA, 8e5, 40e6, 2, 0.1, 8e5, 40e6, 2, 0.2);
    compute_weights(s);
    CHECK(s.stations[0].weight == doctest::Approx(0.5));
  }
  SUBCASE("all-zero deficits share equally") {
    auto s = pair(SchedulerKind::TWUSA, 8e5, 40e6, 0, 1, 8e5, 80e6, 0, 1);
    compute_weights(s);
    CHECK(s.stations[0].weight == doctest::Approx(0.5));
  }
  SUBCASE("round robin weights are equal") {
    auto s = pair(SchedulerKind::RRA, 8e5, 40e6, 2, 1, 8e5, 80e6, 9, 1);
    compute_weights(s);
    CHECK(s.stations[0].weight == doctest::Approx(0.5));
  }
  SUBCASE("active station without a rate") {
    auto s = pair(SchedulerKind::TWUSA, 8e5, 0.0, 2, 1, 8e5, 80e6, 2, 1);
    CHECK_THROWS_AS(compute_weights(s), ContractViolation);
  }
}

TEST_CASE("slot assignment") {
  SUBCASE("single claimant takes the frame") {
    SchedulerState s(setup(SchedulerKind::TWUSA), 1);
    s.stations[0].active = true;
    s.stations[0].demand_bits = 1e9;
    s.stations[0].rate_bps = 40e6;
    s.stations[0].weight = 1.0;
    assign_slots(s);
    CHECK(s.stations[0].slots == 500);
    CHECK(s.stations[0].flag == 1);
  }
  SUBCASE("proportional split") {
    auto s = pair(SchedulerKind::TWUSA, 1e9, 40e6, 2, 1, 1e9, 80e6, 2, 1);
    compute_weights(s);
    assign_slots(s);
    CHECK(s.stations[0].slots == 400);
    CHECK(s.stations[1].slots == 100);
  }
  SUBCASE("demand caps the grant") {
    auto s = pair(SchedulerKind::TWUSA, 20 * 80.0, 40e6, 2, 1, 1e9, 80e6, 2, 1);
    s.stations[0].weight = 0.8;
    s.stations[1].weight = 0.2;
    assign_slots(s);
    CHECK(s.stations[0].slots == 20);
    CHECK(s.stations[1].slots == 100);

    leftover_redistribution(s);
    CHECK(s.stations[0].slots == 20);
    CHECK(s.stations[1].slots == 480);
  }
  SUBCASE("redistribution can be disabled") {
    auto s = pair(SchedulerKind::TWUSA, 20 * 80.0, 40e6, 2, 1, 1e9, 80e6, 2, 1);
    s.setup.redistribute_leftover = false;
    s.stations[0].weight = 0.8;
    s.stations[1].weight = 0.2;
    assign_slots(s);
    leftover_redistribution(s);
    CHECK(s.stations[1].slots == 100);
  }
  SUBCASE("nothing capped leaves nothing to redistribute") {
    auto s = pair(SchedulerKind::TWUSA, 1e9, 40e6, 2, 1, 1e9, 80e6, 2, 1);
    compute_weights(s);
    assign_slots(s);
    leftover_redistribution(s);
    CHECK(s.stations[0].slots == 400);
    CHECK(s.stations[1].slots == 100);
  }
}

TEST_CASE("round robin pointer persists") {
  SchedulerState s(setup(SchedulerKind::RRA), 3);
  for (auto& st : s.stations) {
    st.active = true;
    st.rate_bps = 40e6;
    st.demand_bits = 300 * 80.0;
  }
  compute_weights(s);
  assign_slots(s);
  CHECK(s.stations[0].slots == 300);
  CHECK(s.stations[1].slots == 200);
  CHECK(s.stations[2].slots == 0);
  CHECK(s.rr_next == 2);
  for (auto& st : s.stations) {
    st.slots = 0;
  }
  assign_slots(s);
  CHECK(s.stations[2].slots == 300);
  CHECK(s.stations[0].slots == 200);
  CHECK(s.rr_next == 1);
}

TEST_CASE("equal deadlines make the deadline variant identical") {
  RandomStream rng(99);
  for (auto [plain, deadline] : {std::pair{SchedulerKind::TWUS, SchedulerKind::DTWUS},
                                 std::pair{SchedulerKind::TWUSA, SchedulerKind::DTWUSA}}) {
    for (int trial = 0; trial < 200; ++trial) {
      SchedulerState a(setup(plain), 6);
      for (auto& st : a.stations) {
        st.active = rng.bernoulli(0.8);
        st.rate_bps = 40e6 * (1 + static_cast<int>(rng.uniform(0.0, 3.0)));
        st.demand_bits = rng.uniform(0.0, 6e5);
        st.scaled_deficit = rng.uniform(0.0, 1e5);
        st.deadline_s = 0.25;
      }
      SchedulerState b = a;
      b.setup.kind = deadline;
      for (auto* s : {&a, &b}) {
        compute_weights(*s);
        assign_slots(*s);
        leftover_redistribution(*s);
      }
      for (std::size_t i = 0; i < a.stations.size(); ++i) {
        REQUIRE(a.stations[i].slots == b.stations[i].slots);
        REQUIRE(a.stations[i].weight == doctest::Approx(b.stations[i].weight));
      }
    }
  }
}

TEST_CASE("random epochs keep the frame invariants") {
  RandomStream rng(2024);
  const auto kinds = {SchedulerKind::RR,   SchedulerKind::RRA,   SchedulerKind::TWUS,
                      SchedulerKind::TWUSA, SchedulerKind::DTWUS, SchedulerKind::DTWUSA};
  int frames = 0;
  while (frames < 100000) {
    for (auto kind : kinds) {
      const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(0.0, 12.0));
      SchedulerState s(setup(kind), n);
      std::vector<PollReport> reports(n);
      std::vector<double> snr(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double rto = rng.uniform(0.2, 1.0);
        reports[i] = {static_cast<int>(rng.uniform(0.0, 101.0)), rng.uniform(0.0, rto), rng.uniform(0.02, 0.3),
                      rto};
        snr[i] = rng.uniform(5.0, 35.0);
      }
      begin_epoch(s, reports, snr, table());
      const double sum_dc0 = static_cast<double>(s.num_schedulable);
      for (int f = 0; f < s.epoch_frames; ++f, ++frames) {
        for (auto& x : snr) {
          x = rng.uniform(5.0, 35.0);
        }
        std::vector<double> demand_before;
        for (const auto& st : s.stations) {
          demand_before.push_back(st.demand_bits);
        }
        const auto before = s;
        schedule_frame(s, snr, table());
        const auto& t = s.setup.timing;

        REQUIRE(s.slots_granted() <= t.uplink_slots_per_frame);
        int active = 0;
        double dc_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto& st = s.stations[i];
          REQUIRE(st.slots >= 0);
          REQUIRE(st.demand_bits >= 0.0);
          REQUIRE(st.demand_bits <= before.stations[i].demand_bits);
          if (st.schedulable) {
            dc_sum += st.deficit_bits;
          }
          if (!st.active) {
            REQUIRE(st.slots == 0);
            REQUIRE(st.weight == 0.0);
            continue;
          }
          ++active;
          REQUIRE(st.scaled_deficit >= -1e-6);
          // Never more than one slot beyond the outstanding demand.
          REQUIRE(st.slots * st.rate_bps * t.slot_duration_s() < st.demand_bits + st.rate_bps * t.slot_duration_s() + 1e-6);
          if (uses_deadline(kind)) {
            REQUIRE(st.deadline_s > 0.0);
          }
        }
        if (active > 0) {
          REQUIRE(s.weight_sum() == doctest::Approx(1.0));
        }
        REQUIRE(dc_sum == doctest::Approx(sum_dc0).epsilon(1e-9).scale(1e6));
      }
    }
  }
}

TEST_CASE("scheduling is deterministic") {
  SchedulerState a(setup(SchedulerKind::DTWUSA));
  std::vector<PollReport> reports = uniform_reports(5);
  reports[2].tto_s = 0.05;
  std::vector<double> snr{13.0, 19.0, 25.0, 30.0, 11.0};
  begin_epoch(a, reports, snr, table());
  SchedulerState b = a;
  for (int f = 0; f < a.epoch_frames; ++f) {
    schedule_frame(a, snr, table());
    schedule_frame(b, snr, table());
    for (std::size_t i = 0; i < 5; ++i) {
      REQUIRE(a.stations[i].slots == b.stations[i].slots);
    }
    std::rotate(snr.begin(), snr.begin() + 1, snr.end());
  }
}

TEST_CASE("deadline pressure shifts slots toward the urgent station") {
  auto plain = pair(SchedulerKind::DTWUSA, 1e9, 40e6, 2, 0.3, 1e9, 40e6, 2, 0.3);
  auto urgent = pair(SchedulerKind::DTWUSA, 1e9, 40e6, 2, 0.05, 1e9, 40e6, 2, 0.3);
  for (auto* s : {&plain, &urgent}) {
    compute_weights(*s);
    assign_slots(*s);
  }
  CHECK(plain.stations[0].slots == 250);
  CHECK(urgent.stations[0].slots > urgent.stations[1].slots);
  CHECK(urgent.stations[0].slots > plain.stations[0].slots);
}
