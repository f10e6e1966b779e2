#include "uplink/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uplink {

double expected_wait_epochs(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::domain_error("expected_wait_epochs: p must be in (0, 1]");
  }
  return 1.0 / p - 1.0;
}

double adjusted_rtt(const AnalysisParams& params) {
  return params.rtt_w_s + expected_wait_epochs(params.p) * params.k_frames * params.frame_duration_s;
}

double send_rate(const AnalysisParams& params, bool use_adjusted) {
  const double rtt = use_adjusted ? adjusted_rtt(params) : params.rtt_w_s;
  if (!(rtt > 0.0)) {
    throw std::domain_error("send_rate: round trip time must be positive");
  }
  const double window_limited = params.cwnd_max / rtt;
  const double pw = params.p_w;
  if (!(pw > 0.0)) {
    if (!std::isfinite(window_limited)) {
      throw std::domain_error("send_rate: unbounded without losses or a window limit");
    }
    return window_limited;
  }
  const double b = params.b;
  const double denom = rtt * std::sqrt(2.0 * b * pw / 3.0) +
                       params.to_s * std::min(1.0, 3.0 * std::sqrt(3.0 * b * pw / 8.0)) * pw *
                           (1.0 + 32.0 * pw * pw);
  return std::min(window_limited, 1.0 / denom);
}

AnalysisParams params_from_metrics(const ExperimentConfig& config, const MetricsRecord& mean) {
  AnalysisParams params;
  params.p = mean.schedulable_prob;
  params.k_frames = mean.mean_epoch_frames;
  params.frame_duration_s = config.timing.frame_duration_s;
  params.rtt_w_s = mean.mean_rtt_s;
  params.b = config.acks_per_packet;
  params.to_s = mean.mean_rto_s;
  params.p_w = mean.loss_rate;
  params.cwnd_max = config.cwnd_max;
  return params;
}

std::vector<ComparisonRow> compare_with_simulation(const ExperimentConfig& config,
                                                   std::span<const double> cwnd_max_values,
                                                   const ExperimentOptions& options) {
  ExperimentOptions opts = options;
  opts.transport_fairness = false;
  const auto rows = sweep(config, SweepParameter::CwndMax, cwnd_max_values, opts);
  std::vector<ComparisonRow> out;
  for (const auto& row : rows) {
    ExperimentConfig point = config;
    point.cwnd_max = static_cast<int>(std::lround(row.value));
    ComparisonRow cmp;
    cmp.cwnd_max = point.cwnd_max;
    cmp.params = params_from_metrics(point, row.metrics.mean);
    cmp.sim_bps = row.metrics.mean.send_rate_pps * config.packet_len_bits;
    cmp.model_bps = send_rate(cmp.params, true) * config.packet_len_bits;
    cmp.rel_err = cmp.sim_bps > 0.0 ? std::abs(cmp.model_bps - cmp.sim_bps) / cmp.sim_bps
                                    : std::numeric_limits<double>::infinity();
    out.push_back(cmp);
  }
  return out;
}

} // namespace uplink
