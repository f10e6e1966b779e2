#include "uplink/scheduler.hpp"

#include "uplink/tcp_reno.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace uplink {

namespace {

// Absorbs floating-point noise before floor/ceil on slot counts.
constexpr double kSlotEps = 1e-9;

int slots_for_demand(const StationSchedule& st, double slot_s) {
  return static_cast<int>(std::ceil(st.demand_bits / (st.rate_bps * slot_s) - kSlotEps));
}

void require_sizes(const SchedulerState& state, std::size_t n, const char* what) {
  if (n != state.stations.size()) {
    throw ContractViolation(std::string(what) + ": per-station input has wrong length");
  }
}

} // namespace

SchedulerSetup SchedulerSetup::from(const ExperimentConfig& config) {
  SchedulerSetup setup;
  setup.kind = config.scheduler;
  setup.timing = config.timing;
  setup.packet_len_bits = config.packet_len_bits;
  setup.deficit_form = config.deficit_form;
  setup.redistribute_leftover = config.redistribute_leftover;
  return setup;
}

int SchedulerState::slots_granted() const {
  int total = 0;
  for (const auto& st : stations) {
    total += st.slots;
  }
  return total;
}

double SchedulerState::weight_sum() const {
  double total = 0.0;
  for (const auto& st : stations) {
    if (st.active) {
      total += st.weight;
    }
  }
  return total;
}

int epoch_length_frames(double min_rtt_s, double frame_duration_s) {
  return std::max(1, static_cast<int>(std::ceil(min_rtt_s / frame_duration_s - kSlotEps)));
}

void begin_epoch(SchedulerState& state, std::span<const PollReport> reports,
                 std::span<const double> snr_dB, const ModulationTable& table) {
  if (reports.empty()) {
    throw ContractViolation("begin_epoch: empty connected set");
  }
  if (reports.size() != snr_dB.size()) {
    throw ContractViolation("begin_epoch: reports and SNR lengths differ");
  }
  const auto& timing = state.setup.timing;
  state.stations.assign(reports.size(), StationSchedule{});
  state.num_schedulable = 0;

  double min_rtt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& report = reports[i];
    auto& st = state.stations[i];
    min_rtt = std::min(min_rtt, report.rtt_s);
    st.timeout_s = report.rto_s;
    st.schedulable = report.cwnd > 0 && snr_dB[i] >= table.min_threshold_dB();
    st.demand_bits = st.schedulable ? static_cast<double>(report.cwnd) * state.setup.packet_len_bits : 0.0;
    st.deadline_s = state.setup.deadline_enabled() ? report.tto_s : 1.0;
    if (st.schedulable) {
      ++state.num_schedulable;
    }
  }

  state.quantum_bits = state.num_schedulable > 0
                           ? table.r_min_bps() * timing.uplink_slots_per_frame * timing.slot_duration_s() /
                                 state.num_schedulable
                           : 0.0;
  state.previous_quantum_bits = state.quantum_bits;
  state.epoch_frames = epoch_length_frames(min_rtt, timing.frame_duration_s);
  state.frame_in_epoch = 0;
  if (state.rr_next >= state.stations.size()) {
    state.rr_next = 0;
  }
}

void frame_active_set(SchedulerState& state, std::span<const double> snr_dB,
                      const ModulationTable& table) {
  require_sizes(state, snr_dB.size(), "frame_active_set");
  for (std::size_t i = 0; i < state.stations.size(); ++i) {
    auto& st = state.stations[i];
    st.flag = 0;
    st.slots = 0;
    st.weight = 0.0;
    st.rate_bps = 0.0;
    st.active = false;
    if (!st.schedulable) {
      continue;
    }
    const auto rate = select_rate(snr_dB[i], table, state.setup.mode());
    if (rate && st.demand_bits > 1.0) {
      st.active = true;
      st.rate_bps = *rate;
    }
  }
}

void update_demand(SchedulerState& state) {
  const double slot_s = state.setup.timing.slot_duration_s();
  for (auto& st : state.stations) {
    st.demand_bits = std::max(0.0, st.demand_bits - st.granted_bits(slot_s));
  }
}

void update_quantum(SchedulerState& state) {
  const double slot_s = state.setup.timing.slot_duration_s();
  state.previous_quantum_bits = state.quantum_bits;
  if (state.num_schedulable == 0) {
    state.quantum_bits = 0.0;
    return;
  }
  double served = 0.0;
  for (const auto& st : state.stations) {
    if (st.schedulable) {
      served += st.granted_bits(slot_s);
    }
  }
  state.quantum_bits = served / state.num_schedulable;
}

void update_deficits(SchedulerState& state) {
  const double slot_s = state.setup.timing.slot_duration_s();
  const double credit = state.setup.deficit_form == DeficitForm::Equation ? state.quantum_bits
                                                                          : state.previous_quantum_bits;
  for (auto& st : state.stations) {
    if (st.schedulable) {
      st.deficit_bits += credit - st.granted_bits(slot_s);
    }
  }
}

void scale_deficits(SchedulerState& state) {
  double min_dc = std::numeric_limits<double>::infinity();
  for (const auto& st : state.stations) {
    if (st.active) {
      min_dc = std::min(min_dc, st.deficit_bits);
    }
  }
  for (auto& st : state.stations) {
    st.scaled_deficit = st.active ? st.deficit_bits + std::abs(min_dc) : 0.0;
  }
}

void update_deadlines(SchedulerState& state) {
  if (!state.setup.deadline_enabled()) {
    for (auto& st : state.stations) {
      st.deadline_s = 1.0;
    }
    return;
  }
  const double frame_s = state.setup.timing.frame_duration_s;
  for (auto& st : state.stations) {
    if (!st.schedulable || st.active) {
      continue;
    }
    st.deadline_s -= frame_s;
    if (st.deadline_s <= 0.0) {
      st.deadline_s = st.timeout_s;
    }
  }
}

void compute_weights(SchedulerState& state) {
  std::size_t active = 0;
  double total = 0.0;
  const bool weighted = !is_round_robin(state.setup.kind);
  for (auto& st : state.stations) {
    st.weight = 0.0;
    if (!st.active) {
      continue;
    }
    if (!(st.rate_bps > 0.0)) {
      throw ContractViolation("compute_weights: active station without a rate");
    }
    ++active;
    if (weighted) {
      st.weight = (st.demand_bits / st.rate_bps) * (st.scaled_deficit / st.rate_bps);
      if (state.setup.deadline_enabled()) {
        st.weight /= st.deadline_s;
      }
      total += st.weight;
    }
  }
  if (active == 0) {
    return;
  }
  const bool equal_share = !weighted || !(total > 0.0) || !std::isfinite(total);
  for (auto& st : state.stations) {
    if (st.active) {
      st.weight = equal_share ? 1.0 / static_cast<double>(active) : st.weight / total;
    }
  }
}

void assign_slots(SchedulerState& state) {
  const auto& timing = state.setup.timing;
  const double slot_s = timing.slot_duration_s();
  const int budget = timing.uplink_slots_per_frame;

  if (is_round_robin(state.setup.kind)) {
    const std::size_t n = state.stations.size();
    int remaining = budget;
    std::size_t last = n;
    for (std::size_t j = 0; j < n && remaining > 0; ++j) {
      const std::size_t i = (state.rr_next + j) % n;
      auto& st = state.stations[i];
      if (!st.active) {
        continue;
      }
      const int grant = std::min(slots_for_demand(st, slot_s), remaining);
      if (grant > 0) {
        st.slots = grant;
        st.flag = 1;
        remaining -= grant;
        last = i;
      }
    }
    if (last != n) {
      state.rr_next = (last + 1) % n;
    }
    return;
  }

  const double weight_total = state.weight_sum();
  if (!(weight_total > 0.0)) {
    return;
  }
  int granted = 0;
  for (auto& st : state.stations) {
    if (!st.active) {
      continue;
    }
    const double share_s = st.weight * timing.uplink_duration_s() / weight_total;
    const double need_s = st.demand_bits / st.rate_bps;
    st.slots = std::max(0, static_cast<int>(std::floor(std::min(share_s, need_s) / slot_s + kSlotEps)));
    granted += st.slots;
  }
  // Guard the frame budget against accumulated rounding.
  while (granted > budget) {
    auto it = std::min_element(state.stations.begin(), state.stations.end(), [](const auto& a, const auto& b) {
      if ((a.slots > 0) != (b.slots > 0)) {
        return a.slots > 0;
      }
      return a.weight < b.weight;
    });
    --it->slots;
    --granted;
  }
  for (auto& st : state.stations) {
    st.flag = st.slots >= 1 ? 1 : 0;
  }
}

void leftover_redistribution(SchedulerState& state) {
  if (!state.setup.redistribute_leftover || is_round_robin(state.setup.kind)) {
    return;
  }
  const double slot_s = state.setup.timing.slot_duration_s();
  int remaining = state.setup.timing.uplink_slots_per_frame - state.slots_granted();
  if (remaining <= 0) {
    return;
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < state.stations.size(); ++i) {
    if (state.stations[i].active) {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.stations[a].weight > state.stations[b].weight;
  });
  for (const auto i : order) {
    if (remaining == 0) {
      break;
    }
    auto& st = state.stations[i];
    const int extra = std::min(remaining, slots_for_demand(st, slot_s) - st.slots);
    if (extra > 0) {
      st.slots += extra;
      st.flag = 1;
      remaining -= extra;
    }
  }
}

void schedule_frame(SchedulerState& state, std::span<const double> snr_dB,
                    const ModulationTable& table) {
  ++state.frame_in_epoch;
  update_demand(state);
  update_quantum(state);
  update_deficits(state);
  frame_active_set(state, snr_dB, table);
  scale_deficits(state);
  update_deadlines(state);
  compute_weights(state);
  assign_slots(state);
  leftover_redistribution(state);
}

} // namespace uplink
