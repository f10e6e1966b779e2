#pragma once

#include "uplink/config.hpp"
#include "uplink/metrics.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace uplink {

/// Optional per-frame CSV traces. Each stream receives a header row first.
///   snr:        run,frame,ss,snr_dB
///   allocation: run,frame,ss,rate_bps,slots,used_slots,demand_bits,dc,weight,deadline_s
///   tcp:        run,time_s,ss,event,cwnd,ssthresh,rto
struct TraceSinks {
  std::ostream* snr = nullptr;
  std::ostream* allocation = nullptr;
  std::ostream* tcp = nullptr;

  bool any() const { return snr || allocation || tcp; }
};

struct RunOptions {
  TraceSinks traces;
  /// Replaces every Rayleigh draw with this power gain (test hook).
  std::optional<double> fixed_fading_gain;
};

/// Simulates `num_frames` frames of run `run_index` and returns metrics for
/// the frames after warm-up. Throws std::runtime_error if the state goes
/// non-finite.
MetricsRecord run_single(const ExperimentConfig& config, int run_index, const RunOptions& options = {});

struct ExperimentOptions {
  /// Pair every run with a round-robin run on the same seeds to fill
  /// wctfi/tfi. Round-robin schedulers report 1.
  bool transport_fairness = true;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned workers = 0;
};

/// All `num_runs` runs, ordered by run index regardless of completion order.
std::vector<MetricsRecord> run_records(const ExperimentConfig& config,
                                       const ExperimentOptions& options = {});

AggregateMetrics run_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

enum class SweepParameter { SigmaDb, CwndMax };

struct SweepRow {
  double value = 0.0;
  AggregateMetrics metrics;
};

/// One aggregate per value. Throws std::invalid_argument for no values.
std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepParameter parameter,
                            std::span<const double> values, const ExperimentOptions& options = {});

/// Transport fairness of `psi` against a round-robin `baseline`. Stations the
/// baseline never served count as fully fair.
void fill_transport_fairness(MetricsRecord& record, const MetricsRecord& baseline);

} // namespace uplink
