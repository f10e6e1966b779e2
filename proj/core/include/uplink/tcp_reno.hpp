#pragma once

#include "uplink/config.hpp"
#include "uplink/rng.hpp"

#include <cstdint>
#include <stdexcept>

namespace uplink {

/// Thrown when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

struct TcpParams {
  double base_rtt_s = 0.1;
  double rto_min_s = 0.2;
  double rtt_gain = 0.875; // weight of the previous estimate
  int max_backoff = 64;

  double base_rto_s() const;

  static TcpParams from(const ExperimentConfig& config);
};

/// Reno sender state at packet granularity. `inflight` counts packets handed
/// to the MAC and not yet cumulatively acknowledged; errored packets stay in
/// it until their retransmission is acknowledged.
struct TcpFlowState {
  int cwnd = 1;
  int cwnd_max = 1;
  int ssthresh = 2;
  double rtt_estimate_s = 0.0;
  double rto_s = 0.0;
  double tto_s = 0.0;
  int dup_ack_count = 0;
  int inflight = 0;
  int acks_per_packet = 1;
  double start_offset_s = 0.0;
  std::int64_t packets_acked_total = 0;
  std::int64_t loss_indications = 0;

  std::int64_t timeouts = 0;
  std::int64_t triple_dups = 0;
  bool in_backoff = false;
  int unacked_packets_in_ack = 0; // clean packets not yet forming a full ACK (b > 1)
  int window_acks = 0;            // ACKs counted toward the next +1 in congestion avoidance

  bool can_send() const { return inflight < cwnd; }
};

struct DeliveryOutcome {
  int clean = 0;
  int errored = 0;
  int triple_dup_events = 0;
};

/// cwnd = 1, ssthresh = cwnd_max/2, rto = max(2 base_rtt, rto_min), tto = rto,
/// start offset uniform in [0, base_rtt].
TcpFlowState init_flow(const ExperimentConfig& config, RandomStream& rng);

/// Feedback for `n_packets` transmissions. Each packet is independently
/// errored with `per_packet_error_prob`; every third errored packet is a
/// triple-duplicate loss indication (halve cwnd). Clean packets grow cwnd
/// (slow start below ssthresh, +1 per window above), refresh the RTT
/// estimate and re-arm the retransmission timer.
/// Throws ContractViolation if n_packets > inflight.
DeliveryOutcome on_packets_delivered(TcpFlowState& flow, const TcpParams& params, int n_packets,
                                     double measured_rtt_s, RandomStream& rng,
                                     double per_packet_error_prob);

void on_timeout(TcpFlowState& flow, const TcpParams& params);

/// Exponential average; rto follows 2x the estimate (floored at rto_min)
/// except while backed off. Throws ContractViolation for sample <= 0.
void update_rtt(TcpFlowState& flow, const TcpParams& params, double sample_s);

double demand_bits(const TcpFlowState& flow, int packet_len_bits);

} // namespace uplink
