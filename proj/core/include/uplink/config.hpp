#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uplink {

/// Frame/slot layout of a TDD frame. Only the uplink subframe carries
/// schedulable data slots.
struct FrameTiming {
  double frame_duration_s = 2e-3;
  double uplink_fraction = 0.5;
  int uplink_slots_per_frame = 500;

  double uplink_duration_s() const { return uplink_fraction * frame_duration_s; }
  double slot_duration_s() const { return uplink_duration_s() / uplink_slots_per_frame; }
};

enum class SchedulerKind { RR, RRA, TWUS, TWUSA, DTWUS, DTWUSA };

enum class RateMode { FixedQpsk, Adaptive };

enum class DistanceLayout { Equal, Unequal };

/// How the residual per-packet error probability is derived.
enum class PacketErrorModel {
  TargetBer,    // 1 - (1 - target_ber)^PL, independent of the frame's SNR
  SnrDependent, // MQAM BER bound at the frame's SNR and chosen rate
  Fixed,        // packet_error_prob as given (0 disables residual loss)
};

/// Deficit-counter update form. `Equation` credits the same-frame quantum and
/// conserves the deficit sum; `Pseudocode` credits the previous frame's.
enum class DeficitForm { Equation, Pseudocode };

std::string_view to_string(SchedulerKind kind);
std::string_view to_string(PacketErrorModel model);
std::string_view to_string(DeficitForm form);
std::optional<SchedulerKind> parse_scheduler_kind(std::string_view text);

RateMode rate_mode(SchedulerKind kind);
bool uses_deadline(SchedulerKind kind);
bool is_round_robin(SchedulerKind kind);
/// RR baseline with the same modulation mode as `kind`.
SchedulerKind round_robin_baseline(SchedulerKind kind);
/// cwnd_max at which throughput saturates: 70 (adaptive) or 60 (fixed QPSK).
int default_cwnd_max(SchedulerKind kind);

struct ExperimentConfig {
  FrameTiming timing;

  int num_ss = 10;
  std::vector<double> distances_km;
  double path_loss_exponent = 4.0;
  double shadowing_sigma_dB = 8.0;
  int shadow_block_frames = 50;
  double fading_mean_power = 1.0;
  double noise_psd = 0.35;
  double channel_bandwidth_hz = 25e6;
  double target_ber = 1e-6;
  double edge_margin_dB = 13.4;
  std::vector<double> rates_bps = {40e6, 80e6, 120e6};

  SchedulerKind scheduler = SchedulerKind::TWUSA;
  DeficitForm deficit_form = DeficitForm::Equation;
  bool redistribute_leftover = true;

  int cwnd_max = 70;
  int packet_len_bits = 8000;
  int acks_per_packet = 1;
  double base_rtt_s = 0.1;
  double rto_min_s = 0.2;
  double rtt_gain = 0.875;
  PacketErrorModel packet_error_model = PacketErrorModel::SnrDependent;
  double packet_error_prob = 0.0;

  int num_frames = 40000;
  int warmup_frames = 200;
  int num_runs = 50;
  std::uint64_t rng_seed = 1;
};

class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& reason)
      : std::invalid_argument(field + ": " + reason), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

ExperimentConfig default_config(DistanceLayout layout,
                                SchedulerKind scheduler = SchedulerKind::TWUSA);

/// Throws ValidationError naming the first violated invariant.
void validate(const ExperimentConfig& config);

/// Parses flat `key = value` text. `#` starts a comment; arrays are
/// comma-separated. Keys absent from the text keep the values of `base`.
/// Unknown keys and malformed values throw ValidationError.
ExperimentConfig parse_config(std::string_view text,
                              const ExperimentConfig& base = default_config(DistanceLayout::Equal));
ExperimentConfig load_config(const std::string& path,
                             const ExperimentConfig& base = default_config(DistanceLayout::Equal));
std::string to_config_text(const ExperimentConfig& config);

} // namespace uplink
