#pragma once

#include "uplink/amc.hpp"
#include "uplink/config.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace uplink {

/// What a subscriber station reports when polled.
struct PollReport {
  int cwnd = 0;
  double tto_s = 0.0; // time left before its retransmission timer fires
  double rtt_s = 0.0;
  double rto_s = 0.0; // full timeout value, used when a deadline expires
};

struct SchedulerSetup {
  SchedulerKind kind = SchedulerKind::TWUSA;
  FrameTiming timing;
  int packet_len_bits = 8000;
  DeficitForm deficit_form = DeficitForm::Equation;
  bool redistribute_leftover = true;

  RateMode mode() const { return rate_mode(kind); }
  bool deadline_enabled() const { return uses_deadline(kind); }

  static SchedulerSetup from(const ExperimentConfig& config);
};

/// Per-station bookkeeping. `flag`, `slots` and `rate_bps` describe the most
/// recently scheduled frame until frame_active_set() starts the next one.
struct StationSchedule {
  bool schedulable = false;
  bool active = false;
  int flag = 0;
  double demand_bits = 0.0;
  double deficit_bits = 1.0;
  double scaled_deficit = 1.0;
  double weight = 0.0;
  int slots = 0;
  double deadline_s = 1.0;
  double rate_bps = 0.0;
  double timeout_s = 0.0;

  double granted_bits(double slot_duration_s) const {
    return flag * static_cast<double>(slots) * rate_bps * slot_duration_s;
  }
};

struct SchedulerState {
  SchedulerSetup setup;
  std::vector<StationSchedule> stations;
  int epoch_frames = 1;   // k
  int frame_in_epoch = 0; // n; 0 right after polling
  int num_schedulable = 0;
  double quantum_bits = 0.0;
  double previous_quantum_bits = 0.0;
  std::size_t rr_next = 0; // persists across epochs

  explicit SchedulerState(SchedulerSetup s = {}, std::size_t num_stations = 0)
      : setup(s), stations(num_stations) {}

  bool epoch_finished() const { return frame_in_epoch >= epoch_frames; }
  int slots_granted() const;
  double weight_sum() const;
};

/// Polls all connected stations and opens a polling epoch: builds the
/// schedulable set (cwnd > 0 and SNR at or above the lowest threshold), sets
/// demand to cwnd * PL, resets deficits/flags/grants, seeds deadlines with the
/// reported time-to-timeout (or 1 without deadlines), sets the initial
/// quantum R_min N_s T_s / M and picks k = ceil(min RTT / T_f) frames.
/// Throws ContractViolation when `reports` is empty or sizes disagree.
void begin_epoch(SchedulerState& state, std::span<const PollReport> reports,
                 std::span<const double> snr_dB, const ModulationTable& table);

/// Active set for the next frame: schedulable stations whose SNR supports a
/// rate this frame and which still have more than one bit of demand. Clears
/// the previous frame's grants.
void frame_active_set(SchedulerState& state, std::span<const double> snr_dB,
                      const ModulationTable& table);

/// D_i -= bits granted last frame, floored at zero.
void update_demand(SchedulerState& state);

/// Q(n) = (1/M) * bits granted to the schedulable set last frame.
void update_quantum(SchedulerState& state);

/// DC_i += Q - bits granted last frame, for every schedulable station. The
/// quantum is Q(n) in the equation form and Q(n-1) in the pseudocode form.
void update_deficits(SchedulerState& state);

/// dc_i = DC_i + |min over the active set of DC_j|.
void scale_deficits(SchedulerState& state);

/// Schedulable but inactive stations lose one frame of deadline; an expired
/// deadline restarts from the station's full timeout value.
void update_deadlines(SchedulerState& state);

/// W_i proportional to (D_i/R_i)(dc_i/R_i), divided by d_i with deadlines;
/// normalized over the active set. If every raw weight is zero the active
/// set shares equally. Round robin uses equal weights.
/// Throws ContractViolation for an active station with zero rate.
void compute_weights(SchedulerState& state);

/// Weighted: N_i = floor(min(W_i T_ul / sum W, D_i / R_i) / T_s).
/// Round robin: one pass from the persistent pointer, each station getting
/// min(ceil(D_i / (R_i T_s)), slots left).
void assign_slots(SchedulerState& state);

/// Offers slots left by demand caps and rounding to active stations with
/// residual demand, by descending weight. No-op when disabled.
void leftover_redistribution(SchedulerState& state);

/// One frame of the epoch: demand, quantum and deficit updates for the
/// previous frame's service, then the new active set, weights and grants.
void schedule_frame(SchedulerState& state, std::span<const double> snr_dB,
                    const ModulationTable& table);

/// ceil(rtt / T_f), at least 1.
int epoch_length_frames(double min_rtt_s, double frame_duration_s);

} // namespace uplink
