#include "uplink/tcp_reno.hpp"

#include <algorithm>

namespace uplink {

namespace {

constexpr int kDupAckThreshold = 3;

void grow_window(TcpFlowState& flow) {
  if (flow.cwnd < flow.ssthresh) {
    ++flow.cwnd;
  } else if (++flow.window_acks >= flow.cwnd) {
    ++flow.cwnd;
    flow.window_acks = 0;
  }
  flow.cwnd = std::min(flow.cwnd, flow.cwnd_max);
}

void halve_window(TcpFlowState& flow) {
  const int half = flow.cwnd / 2;
  flow.ssthresh = std::max(half, 2);
  flow.cwnd = std::max(half, 1);
  flow.window_acks = 0;
}

} // namespace

double TcpParams::base_rto_s() const { return std::max(2.0 * base_rtt_s, rto_min_s); }

TcpParams TcpParams::from(const ExperimentConfig& config) {
  TcpParams params;
  params.base_rtt_s = config.base_rtt_s;
  params.rto_min_s = config.rto_min_s;
  params.rtt_gain = config.rtt_gain;
  return params;
}

TcpFlowState init_flow(const ExperimentConfig& config, RandomStream& rng) {
  const auto params = TcpParams::from(config);
  TcpFlowState flow;
  flow.cwnd = 1;
  flow.cwnd_max = config.cwnd_max;
  flow.ssthresh = std::max(config.cwnd_max / 2, 2);
  flow.rtt_estimate_s = config.base_rtt_s;
  flow.rto_s = params.base_rto_s();
  flow.tto_s = flow.rto_s;
  flow.acks_per_packet = config.acks_per_packet;
  flow.start_offset_s = rng.uniform(0.0, config.base_rtt_s);
  return flow;
}

void update_rtt(TcpFlowState& flow, const TcpParams& params, double sample_s) {
  if (!(sample_s > 0.0)) {
    throw ContractViolation("update_rtt: RTT sample must be positive");
  }
  flow.rtt_estimate_s = params.rtt_gain * flow.rtt_estimate_s + (1.0 - params.rtt_gain) * sample_s;
  if (!flow.in_backoff) {
    flow.rto_s = std::max(params.rto_min_s, 2.0 * flow.rtt_estimate_s);
  }
}

DeliveryOutcome on_packets_delivered(TcpFlowState& flow, const TcpParams& params, int n_packets,
                                     double measured_rtt_s, RandomStream& rng,
                                     double per_packet_error_prob) {
  if (n_packets < 0 || n_packets > flow.inflight) {
    throw ContractViolation("on_packets_delivered: more packets than inflight");
  }
  DeliveryOutcome outcome;
  for (int i = 0; i < n_packets; ++i) {
    const bool errored = per_packet_error_prob > 0.0 && rng.bernoulli(per_packet_error_prob);
    if (errored) {
      ++outcome.errored;
      if (++flow.dup_ack_count >= kDupAckThreshold) {
        halve_window(flow);
        flow.dup_ack_count = 0;
        ++flow.loss_indications;
        ++flow.triple_dups;
        ++outcome.triple_dup_events;
      }
      continue;
    }

    ++outcome.clean;
    --flow.inflight;
    ++flow.packets_acked_total;
    if (++flow.unacked_packets_in_ack >= flow.acks_per_packet) {
      flow.unacked_packets_in_ack = 0;
      grow_window(flow);
    }
    flow.in_backoff = false;
    update_rtt(flow, params, measured_rtt_s);
    flow.tto_s = flow.rto_s;
  }
  return outcome;
}

void on_timeout(TcpFlowState& flow, const TcpParams& params) {
  flow.ssthresh = std::max(flow.cwnd / 2, 2);
  flow.cwnd = 1;
  flow.window_acks = 0;
  flow.rto_s = std::min(2.0 * flow.rto_s, params.max_backoff * params.base_rto_s());
  flow.tto_s = flow.rto_s;
  flow.in_backoff = true;
  flow.dup_ack_count = 0;
  ++flow.loss_indications;
  ++flow.timeouts;
}

double demand_bits(const TcpFlowState& flow, int packet_len_bits) {
  return static_cast<double>(flow.cwnd) * packet_len_bits;
}

} // namespace uplink
