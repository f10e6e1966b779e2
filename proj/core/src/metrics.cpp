#include "uplink/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace uplink {

namespace {

constexpr std::array kFields{
    MetricField{"avg_cwnd", &MetricsRecord::avg_cwnd},
    MetricField{"avg_throughput_bps", &MetricsRecord::avg_throughput_bps},
    MetricField{"aggregate_throughput_bps", &MetricsRecord::aggregate_throughput_bps},
    MetricField{"send_rate_pps", &MetricsRecord::send_rate_pps},
    MetricField{"slot_utilization", &MetricsRecord::slot_utilization},
    MetricField{"grant_utilization", &MetricsRecord::grant_utilization},
    MetricField{"jfi", &MetricsRecord::jfi},
    MetricField{"throughput_jfi", &MetricsRecord::throughput_jfi},
    MetricField{"loss_rate", &MetricsRecord::loss_rate},
    MetricField{"schedulable_prob", &MetricsRecord::schedulable_prob},
    MetricField{"mean_rtt_s", &MetricsRecord::mean_rtt_s},
    MetricField{"mean_rto_s", &MetricsRecord::mean_rto_s},
    MetricField{"mean_epoch_frames", &MetricsRecord::mean_epoch_frames},
    MetricField{"timeouts", &MetricsRecord::timeouts},
    MetricField{"triple_dups", &MetricsRecord::triple_dups},
    MetricField{"wctfi", &MetricsRecord::wctfi},
    MetricField{"tfi", &MetricsRecord::tfi},
    MetricField{"frames", &MetricsRecord::frames},
};

std::vector<double> ratios(std::span<const double> psi, std::span<const double> varsigma) {
  if (psi.size() != varsigma.size() || psi.empty()) {
    throw std::domain_error("fairness index: throughput vectors must be non-empty and equal length");
  }
  std::vector<double> out(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!(varsigma[i] > 0.0)) {
      throw std::domain_error("fairness index: baseline throughput must be positive");
    }
    out[i] = clamp_ratio(psi[i] / varsigma[i]);
  }
  return out;
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

} // namespace

double jfi(std::span<const double> values) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const double x : values) {
    if (x < 0.0) {
      throw std::domain_error("jfi: negative value");
    }
    sum += x;
    sum_sq += x * x;
  }
  if (!(sum > 0.0)) {
    throw std::domain_error("jfi: undefined for an all-zero vector");
  }
  return sum * sum / (static_cast<double>(values.size()) * sum_sq);
}

double clamp_ratio(double ratio) {
  if (ratio < 0.0) {
    throw std::domain_error("clamp_ratio: negative ratio");
  }
  return std::min(ratio, 1.0);
}

double wctfi(std::span<const double> psi, std::span<const double> varsigma) {
  const auto r = ratios(psi, varsigma);
  return *std::min_element(r.begin(), r.end());
}

double tfi(std::span<const double> psi, std::span<const double> varsigma) {
  const auto r = ratios(psi, varsigma);
  if (std::all_of(r.begin(), r.end(), [](double x) { return x == 0.0; })) {
    return 0.0; // nobody got anything relative to the baseline
  }
  return jfi(r);
}

double slot_utilization(double used_slots, int slots_per_frame, int frames) {
  if (frames < 1 || slots_per_frame < 1) {
    throw std::domain_error("slot_utilization: need at least one frame and one slot");
  }
  return used_slots / (static_cast<double>(slots_per_frame) * frames);
}

std::span<const MetricField> metric_fields() { return kFields; }

AggregateMetrics aggregate(std::span<const MetricsRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("aggregate: no records");
  }
  const auto n = static_cast<double>(records.size());
  AggregateMetrics out;
  out.runs = static_cast<int>(records.size());

  const auto mean_std = [&](auto&& get) {
    Moments m;
    for (const auto& r : records) {
      const double x = get(r);
      m.sum += x;
    }
    const double mean = m.sum / n;
    double ss = 0.0;
    for (const auto& r : records) {
      const double d = get(r) - mean;
      ss += d * d;
    }
    return std::pair{mean, records.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
  };

  for (const auto& field : kFields) {
    const auto [mean, sd] = mean_std([&](const MetricsRecord& r) { return r.*field.member; });
    out.mean.*field.member = mean;
    out.stddev.*field.member = sd;
  }

  const auto per_ss = [&](std::vector<double> MetricsRecord::*member) {
    const std::size_t len = (records.front().*member).size();
    (out.mean.*member).assign(len, 0.0);
    (out.stddev.*member).assign(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      const auto [mean, sd] = mean_std([&](const MetricsRecord& r) {
        return i < (r.*member).size() ? (r.*member)[i] : 0.0;
      });
      (out.mean.*member)[i] = mean;
      (out.stddev.*member)[i] = sd;
    }
  };
  per_ss(&MetricsRecord::throughput_bps_per_ss);
  per_ss(&MetricsRecord::slots_per_ss);
  return out;
}

} // namespace uplink
