#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace uplink {

/// Jain's index (sum x)^2 / (n sum x^2). Throws std::domain_error when no
/// value is strictly positive or any value is negative.
double jfi(std::span<const double> values);

/// min(ratio, 1). Throws std::domain_error for negative input.
double clamp_ratio(double ratio);

/// Worst-case transport fairness: min_i clamp(psi_i / varsigma_i).
/// Throws std::domain_error on length mismatch or non-positive baseline.
double wctfi(std::span<const double> psi, std::span<const double> varsigma);

/// Jain's index over the clamped throughput ratios.
double tfi(std::span<const double> psi, std::span<const double> varsigma);

/// Data-carrying slots over the frame budget.
double slot_utilization(double used_slots, int slots_per_frame, int frames);

/// Outcome of one simulation run, measured after warm-up.
struct MetricsRecord {
  double avg_cwnd = 0.0;                 // packets, time and flow average
  double avg_throughput_bps = 0.0;       // mean per-flow goodput
  double aggregate_throughput_bps = 0.0; // sum over flows
  double send_rate_pps = 0.0;            // mean per-flow transmissions / s
  double slot_utilization = 0.0;
  double grant_utilization = 0.0; // granted (not necessarily used) slots
  double jfi = 0.0;               // over cumulative slots granted per station
  double throughput_jfi = 0.0;
  double loss_rate = 0.0;         // loss indications / packets transmitted
  double schedulable_prob = 0.0;  // fraction of station-frames at or above the lowest threshold
  double mean_rtt_s = 0.0;
  double mean_rto_s = 0.0;
  double mean_epoch_frames = 0.0;
  double timeouts = 0.0;
  double triple_dups = 0.0;
  double wctfi = 1.0; // against the paired round-robin run
  double tfi = 1.0;
  double frames = 0.0;
  std::vector<double> throughput_bps_per_ss;
  std::vector<double> slots_per_ss;
};

struct MetricField {
  std::string_view name;
  double MetricsRecord::*member;
};

/// Scalar fields in CSV column order.
std::span<const MetricField> metric_fields();

struct AggregateMetrics {
  int runs = 0;
  MetricsRecord mean;
  MetricsRecord stddev; // sample standard deviation, 0 for a single run
};

/// Mean and sample standard deviation of every field, per-station vectors
/// included. Throws std::invalid_argument for an empty input.
AggregateMetrics aggregate(std::span<const MetricsRecord> records);

} // namespace uplink
