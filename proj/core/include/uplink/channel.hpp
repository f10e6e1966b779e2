#pragma once

#include "uplink/amc.hpp"
#include "uplink/config.hpp"
#include "uplink/rng.hpp"

namespace uplink {

struct ChannelParams {
  double shadowing_sigma_dB = 8.0;
  int shadow_block_frames = 50;
  double fading_mean_power = 1.0;
  double noise_power = 0.35 * 25e6; // N_0 * B

  static ChannelParams from(const ExperimentConfig& config);
};

/// Link between one subscriber station and the base station.
struct LinkState {
  double distance_km = 1.0;
  double pathloss = 1.0;
  double tx_power = 1.0;
  double shadow_gain_dB = 0.0;
  int shadow_frames_left = 0; // 0 forces a fresh shadowing draw next frame
  double fading_gain = 1.0;
  double snr_linear = 0.0;

  double snr_dB() const;
};

/// (1 km / distance)^gamma. Throws std::domain_error for distance <= 0.
double pathloss_gain(double distance_km, double gamma);

/// Transmit power putting the mean SNR at the farthest station (fading at
/// its mean, shadowing at its 0 dB median) at the lowest modulation
/// threshold plus edge_margin_dB.
double calibrate_tx_power(const ExperimentConfig& config, const ModulationTable& table);

LinkState make_link(double distance_km, double gamma, double tx_power);

/// One frame of channel evolution. Shadowing is redrawn from N(0, sigma^2) dB
/// when the current block is exhausted; Rayleigh power gain is drawn every
/// frame from Exponential(fading_mean_power).
void advance_frame(LinkState& link, const ChannelParams& params, RandomStream& rng);

/// Same transition with the random draws supplied by the caller.
/// `shadow_draw_dB` is consumed only when a new shadowing block starts.
void advance_frame(LinkState& link, const ChannelParams& params, double shadow_draw_dB,
                   double fading_gain);

} // namespace uplink
