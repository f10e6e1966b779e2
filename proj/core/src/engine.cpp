#include "uplink/engine.hpp"

#include "uplink/amc.hpp"
#include "uplink/channel.hpp"
#include "uplink/format.hpp"
#include "uplink/rng.hpp"
#include "uplink/scheduler.hpp"
#include "uplink/tcp_reno.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace uplink {

namespace {

struct InTransit {
  std::int64_t ack_frame;
  std::int64_t enqueue_frame;
  double error_prob;
};

struct Station {
  LinkState link;
  RandomStream channel_rng;
  RandomStream tcp_rng;
  TcpFlowState flow;
  std::int64_t start_frame = 0;
  bool started = false;
  std::deque<std::int64_t> mac_queue; // enqueue frame of each waiting packet
  double head_bits_sent = 0.0;        // partial progress on mac_queue.front()
  std::deque<InTransit> in_transit;

  // measurement window
  double slots_granted = 0.0;
  double packets_acked = 0.0;

  double queued_bits(int packet_len_bits) const {
    return static_cast<double>(mac_queue.size()) * packet_len_bits - head_bits_sent;
  }
};

double packet_error_prob(const ExperimentConfig& config, const ModulationTable& table, double snr_linear,
                         double rate_bps) {
  double ber = 0.0;
  switch (config.packet_error_model) {
  case PacketErrorModel::Fixed:
    return config.packet_error_prob;
  case PacketErrorModel::TargetBer:
    ber = config.target_ber;
    break;
  case PacketErrorModel::SnrDependent:
    ber = bit_error_rate(snr_linear, rate_bps / table.bandwidth_hz);
    break;
  }
  return -std::expm1(config.packet_len_bits * std::log1p(-ber));
}

void trace_tcp(const TraceSinks& traces, int run, double time_s, std::size_t ss, const char* event,
               const TcpFlowState& flow) {
  if (traces.tcp) {
    *traces.tcp << run << ',' << format_number(time_s) << ',' << ss << ',' << event << ',' << flow.cwnd << ','
                << flow.ssthresh << ',' << format_number(flow.rto_s) << '\n';
  }
}

void check_finite(const SchedulerState& state, std::int64_t frame) {
  for (std::size_t i = 0; i < state.stations.size(); ++i) {
    const auto& st = state.stations[i];
    if (!std::isfinite(st.demand_bits) || !std::isfinite(st.deficit_bits) || !std::isfinite(st.scaled_deficit) ||
        !std::isfinite(st.weight) || !std::isfinite(st.deadline_s)) {
      throw std::runtime_error("non-finite scheduler state at frame " + std::to_string(frame) + ", ss " +
                               std::to_string(i) + ": D=" + std::to_string(st.demand_bits) +
                               " DC=" + std::to_string(st.deficit_bits) + " W=" + std::to_string(st.weight) +
                               " d=" + std::to_string(st.deadline_s));
    }
  }
}

} // namespace

MetricsRecord run_single(const ExperimentConfig& config, int run_index, const RunOptions& options) {
  validate(config);
  const auto& timing = config.timing;
  const auto& traces = options.traces;
  const double frame_s = timing.frame_duration_s;
  const double slot_s = timing.slot_duration_s();
  const int pl = config.packet_len_bits;
  const auto n_ss = static_cast<std::size_t>(config.num_ss);
  const auto run = static_cast<std::uint64_t>(run_index);

  const auto table = build_table(config.channel_bandwidth_hz, config.target_ber, config.rates_bps);
  const auto channel_params = ChannelParams::from(config);
  const auto tcp_params = TcpParams::from(config);
  const double tx_power = calibrate_tx_power(config, table);
  const auto ack_delay_frames =
      std::max<std::int64_t>(1, std::llround(config.base_rtt_s / frame_s));

  std::vector<Station> stations;
  stations.reserve(n_ss);
  for (std::size_t i = 0; i < n_ss; ++i) {
    Station st{make_link(config.distances_km[i], config.path_loss_exponent, tx_power),
               RandomStream(derive_seed(config.rng_seed, run, i, StreamRole::Channel)),
               RandomStream(derive_seed(config.rng_seed, run, i, StreamRole::Tcp)),
               {},
               0,
               false,
               {},
               0.0,
               {}};
    st.flow = init_flow(config, st.tcp_rng);
    st.start_frame = static_cast<std::int64_t>(std::ceil(st.flow.start_offset_s / frame_s));
    stations.push_back(std::move(st));
  }

  SchedulerState sched(SchedulerSetup::from(config), n_ss);
  sched.epoch_frames = 0; // poll on the first frame

  std::vector<double> snr_dB(n_ss);
  std::vector<PollReport> reports(n_ss);

  if (traces.snr) {
    *traces.snr << "run,frame,ss,snr_dB\n";
  }
  if (traces.allocation) {
    *traces.allocation << "run,frame,ss,rate_bps,slots,used_slots,demand_bits,dc,weight,deadline_s\n";
  }
  if (traces.tcp) {
    *traces.tcp << "run,time_s,ss,event,cwnd,ssthresh,rto\n";
  }

  // measurement accumulators
  double cwnd_sum = 0.0;
  double used_slots = 0.0;
  double granted_slots = 0.0;
  double schedulable_frames = 0.0;
  double rtt_sum = 0.0;
  double rtt_count = 0.0;
  double rto_sum = 0.0;
  double transmitted = 0.0;
  double epoch_len_sum = 0.0;
  double epochs = 0.0;
  std::vector<std::int64_t> loss_at_warmup(n_ss, 0);
  std::vector<std::int64_t> timeouts_at_warmup(n_ss, 0);
  std::vector<std::int64_t> triple_at_warmup(n_ss, 0);

  const std::int64_t num_frames = config.num_frames;
  const std::int64_t warmup = config.warmup_frames;

  for (std::int64_t frame = 0; frame < num_frames; ++frame) {
    const double now_s = static_cast<double>(frame) * frame_s;
    const bool measuring = frame >= warmup;
    if (frame == warmup) {
      for (std::size_t i = 0; i < n_ss; ++i) {
        loss_at_warmup[i] = stations[i].flow.loss_indications;
        timeouts_at_warmup[i] = stations[i].flow.timeouts;
        triple_at_warmup[i] = stations[i].flow.triple_dups;
      }
    }

    // Channel.
    for (std::size_t i = 0; i < n_ss; ++i) {
      auto& st = stations[i];
      if (options.fixed_fading_gain) {
        const double shadow = st.link.shadow_frames_left <= 0
                                  ? st.channel_rng.normal(0.0, channel_params.shadowing_sigma_dB)
                                  : st.link.shadow_gain_dB;
        advance_frame(st.link, channel_params, shadow, *options.fixed_fading_gain);
      } else {
        advance_frame(st.link, channel_params, st.channel_rng);
      }
      snr_dB[i] = st.link.snr_dB();
      if (measuring && snr_dB[i] >= table.min_threshold_dB()) {
        schedulable_frames += 1.0;
      }
      if (traces.snr) {
        *traces.snr << run_index << ',' << frame << ',' << i << ',' << format_number(snr_dB[i]) << '\n';
      }
    }

    // Feedback, timers and window-limited admission at the stations.
    for (std::size_t i = 0; i < n_ss; ++i) {
      auto& st = stations[i];
      while (!st.in_transit.empty() && st.in_transit.front().ack_frame <= frame) {
        const auto pkt = st.in_transit.front();
        st.in_transit.pop_front();
        const double rtt_s = static_cast<double>(frame - pkt.enqueue_frame) * frame_s;
        const auto outcome =
            on_packets_delivered(st.flow, tcp_params, 1, rtt_s, st.tcp_rng, pkt.error_prob);
        if (outcome.errored > 0) {
          // Retransmission goes ahead of new data, behind a partially sent head.
          const auto pos = st.mac_queue.begin() + (st.head_bits_sent > 0.0 && !st.mac_queue.empty() ? 1 : 0);
          st.mac_queue.insert(pos, frame);
        }
        if (outcome.triple_dup_events > 0) {
          trace_tcp(traces, run_index, now_s, i, "triple_dup", st.flow);
        }
        if (measuring && outcome.clean > 0) {
          st.packets_acked += outcome.clean;
          rtt_sum += rtt_s * outcome.clean;
          rtt_count += outcome.clean;
        }
      }

      if (!st.started && frame >= st.start_frame) {
        st.started = true;
        trace_tcp(traces, run_index, now_s, i, "start", st.flow);
      }
      if (!st.started) {
        continue;
      }
      if (st.flow.inflight > 0) {
        st.flow.tto_s = std::max(0.0, st.flow.tto_s - frame_s);
        if (st.flow.tto_s <= 1e-12) {
          on_timeout(st.flow, tcp_params);
          trace_tcp(traces, run_index, now_s, i, "timeout", st.flow);
        }
      }
      while (st.flow.can_send()) {
        st.mac_queue.push_back(frame);
        ++st.flow.inflight;
      }
    }

    // Polling.
    if (sched.epoch_finished()) {
      for (std::size_t i = 0; i < n_ss; ++i) {
        const auto& flow = stations[i].flow;
        reports[i] = {stations[i].started ? flow.cwnd : 0, flow.tto_s, flow.rtt_estimate_s, flow.rto_s};
      }
      begin_epoch(sched, reports, snr_dB, table);
      if (measuring) {
        epoch_len_sum += sched.epoch_frames;
        epochs += 1.0;
      }
    }

    schedule_frame(sched, snr_dB, table);
    check_finite(sched, frame);

    // Uplink transmission in the granted slots.
    for (std::size_t i = 0; i < n_ss; ++i) {
      auto& st = stations[i];
      const auto& grant = sched.stations[i];
      int used = 0;
      if (grant.slots > 0) {
        const double bits_per_slot = grant.rate_bps * slot_s;
        const double capacity = grant.slots * bits_per_slot;
        const double p_err = packet_error_prob(config, table, st.link.snr_linear, grant.rate_bps);
        double sent = 0.0;
        while (sent < capacity && !st.mac_queue.empty()) {
          const double take = std::min(pl - st.head_bits_sent, capacity - sent);
          st.head_bits_sent += take;
          sent += take;
          if (st.head_bits_sent >= pl) {
            st.in_transit.push_back({frame + ack_delay_frames, st.mac_queue.front(), p_err});
            st.mac_queue.pop_front();
            st.head_bits_sent = 0.0;
            if (measuring) {
              transmitted += 1.0;
            }
          }
        }
        used = static_cast<int>(std::ceil(sent / bits_per_slot - 1e-9));
      }
      if (traces.allocation) {
        *traces.allocation << run_index << ',' << frame << ',' << i << ',' << format_number(grant.rate_bps)
                           << ',' << grant.slots << ',' << used << ','
                           << format_number(grant.demand_bits) << ',' << format_number(grant.scaled_deficit)
                           << ',' << format_number(grant.weight) << ',' << format_number(grant.deadline_s)
                           << '\n';
      }
      if (measuring) {
        used_slots += used;
        granted_slots += grant.slots;
        st.slots_granted += grant.slots;
        cwnd_sum += st.flow.cwnd;
        rto_sum += st.flow.rto_s;
      }
    }
  }

  const int measured_frames = static_cast<int>(num_frames - warmup);
  const double duration_s = measured_frames * frame_s;
  const double station_frames = static_cast<double>(measured_frames) * n_ss;

  MetricsRecord rec;
  rec.frames = measured_frames;
  rec.avg_cwnd = cwnd_sum / station_frames;
  rec.slot_utilization = slot_utilization(used_slots, timing.uplink_slots_per_frame, measured_frames);
  rec.grant_utilization = slot_utilization(granted_slots, timing.uplink_slots_per_frame, measured_frames);
  rec.schedulable_prob = schedulable_frames / station_frames;
  rec.mean_rtt_s = rtt_count > 0 ? rtt_sum / rtt_count : 0.0;
  rec.mean_rto_s = rto_sum / station_frames;
  rec.mean_epoch_frames = epochs > 0 ? epoch_len_sum / epochs : static_cast<double>(sched.epoch_frames);
  rec.send_rate_pps = transmitted / duration_s / static_cast<double>(n_ss);

  double loss = 0.0;
  for (std::size_t i = 0; i < n_ss; ++i) {
    const auto& st = stations[i];
    rec.throughput_bps_per_ss.push_back(st.packets_acked * pl / duration_s);
    rec.slots_per_ss.push_back(st.slots_granted);
    loss += static_cast<double>(st.flow.loss_indications - loss_at_warmup[i]);
    rec.timeouts += static_cast<double>(st.flow.timeouts - timeouts_at_warmup[i]);
    rec.triple_dups += static_cast<double>(st.flow.triple_dups - triple_at_warmup[i]);
  }
  rec.loss_rate = transmitted > 0 ? loss / transmitted : 0.0;
  for (const double x : rec.throughput_bps_per_ss) {
    rec.aggregate_throughput_bps += x;
  }
  rec.avg_throughput_bps = rec.aggregate_throughput_bps / static_cast<double>(n_ss);

  const auto safe_jfi = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return x > 0.0; }) ? jfi(v) : 0.0;
  };
  rec.jfi = safe_jfi(rec.slots_per_ss);
  rec.throughput_jfi = safe_jfi(rec.throughput_bps_per_ss);
  return rec;
}

void fill_transport_fairness(MetricsRecord& record, const MetricsRecord& baseline) {
  std::vector<double> psi = record.throughput_bps_per_ss;
  std::vector<double> varsigma = baseline.throughput_bps_per_ss;
  for (std::size_t i = 0; i < psi.size() && i < varsigma.size(); ++i) {
    if (!(varsigma[i] > 0.0)) {
      psi[i] = 1.0;
      varsigma[i] = 1.0;
    }
  }
  record.wctfi = wctfi(psi, varsigma);
  record.tfi = tfi(psi, varsigma);
}

std::vector<MetricsRecord> run_records(const ExperimentConfig& config, const ExperimentOptions& options) {
  validate(config);
  const int runs = config.num_runs;
  std::vector<MetricsRecord> records(static_cast<std::size_t>(runs));
  const bool paired = options.transport_fairness && !is_round_robin(config.scheduler);
  ExperimentConfig baseline_config = config;
  baseline_config.scheduler = round_robin_baseline(config.scheduler);

  const auto work = [&](int run) {
    auto rec = run_single(config, run);
    if (paired) {
      fill_transport_fairness(rec, run_single(baseline_config, run));
    }
    records[static_cast<std::size_t>(run)] = std::move(rec);
  };

  unsigned workers = options.workers != 0 ? options.workers : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(runs));
  if (workers == 1) {
    for (int run = 0; run < runs; ++run) {
      work(run);
    }
    return records;
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int run = next++; run < runs; run = next++) {
        try {
          work(run);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    });
  }
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
  return records;
}

AggregateMetrics run_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
  const auto records = run_records(config, options);
  return aggregate(records);
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepParameter parameter,
                            std::span<const double> values, const ExperimentOptions& options) {
  if (values.empty()) {
    throw std::invalid_argument("sweep: no values");
  }
  std::vector<SweepRow> rows;
  for (const double value : values) {
    ExperimentConfig point = config;
    if (parameter == SweepParameter::SigmaDb) {
      point.shadowing_sigma_dB = value;
    } else {
      point.cwnd_max = static_cast<int>(std::lround(value));
    }
    rows.push_back({value, run_experiment(point, options)});
  }
  return rows;
}

} // namespace uplink
