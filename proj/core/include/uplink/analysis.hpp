#pragma once

#include "uplink/config.hpp"
#include "uplink/engine.hpp"

#include <span>
#include <vector>

namespace uplink {

struct AnalysisParams {
  double p = 1.0;                 // per-frame probability SNR clears the lowest threshold
  double k_frames = 50.0;         // polling epoch
  double frame_duration_s = 2e-3;
  double rtt_w_s = 0.1;           // average round trip time
  double b = 1.0;                 // packets acknowledged per ACK
  double to_s = 0.2;              // average timeout value
  double p_w = 0.0;               // loss indications per packet sent
  double cwnd_max = 70.0;
};

/// Expected number of extra polling epochs before a station is schedulable,
/// sum_{L>=1} L p (1-p)^{L-1} - 1 = 1/p - 1. Throws std::domain_error
/// unless p is in (0, 1].
double expected_wait_epochs(double p);

/// RTT_w + E[L] k T_f.
double adjusted_rtt(const AnalysisParams& params);

/// Steady-state Reno send rate in packets/s:
///   min(cwnd_max / RTT, 1 / (RTT sqrt(2 b p_w / 3)
///                            + TO min(1, 3 sqrt(3 b p_w / 8)) p_w (1 + 32 p_w^2)))
/// with RTT the polling-adjusted value when `use_adjusted`.
/// Throws std::domain_error when the rate would be unbounded.
double send_rate(const AnalysisParams& params, bool use_adjusted);

/// Model inputs measured from one aggregate simulation result.
AnalysisParams params_from_metrics(const ExperimentConfig& config, const MetricsRecord& mean);

struct ComparisonRow {
  int cwnd_max = 0;
  double sim_bps = 0.0;   // simulated per-flow send rate
  double model_bps = 0.0; // polling-adjusted model
  double rel_err = 0.0;   // |model - sim| / sim
  AnalysisParams params;
};

/// Sweeps cwnd_max, measures p, p_w, RTT and TO from the simulation and
/// evaluates the polling-adjusted model at each point.
std::vector<ComparisonRow> compare_with_simulation(const ExperimentConfig& config,
                                                   std::span<const double> cwnd_max_values,
                                                   const ExperimentOptions& options = {});

} // namespace uplink
