#include "uplink/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uplink {

namespace {

constexpr double kReferenceDistanceKm = 1.0;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

} // namespace

ChannelParams ChannelParams::from(const ExperimentConfig& config) {
  return {config.shadowing_sigma_dB, config.shadow_block_frames, config.fading_mean_power,
          config.noise_psd * config.channel_bandwidth_hz};
}

double LinkState::snr_dB() const {
  return snr_linear > 0.0 ? 10.0 * std::log10(snr_linear) : -std::numeric_limits<double>::infinity();
}

double pathloss_gain(double distance_km, double gamma) {
  if (!(distance_km > 0.0)) {
    throw std::domain_error("pathloss_gain: distance must be positive");
  }
  return std::pow(kReferenceDistanceKm / distance_km, gamma);
}

double calibrate_tx_power(const ExperimentConfig& config, const ModulationTable& table) {
  const double d_max = *std::max_element(config.distances_km.begin(), config.distances_km.end());
  const double target_snr = db_to_linear(table.min_threshold_dB() + config.edge_margin_dB);
  const double noise_power = config.noise_psd * config.channel_bandwidth_hz;
  return target_snr * noise_power /
         (config.fading_mean_power * pathloss_gain(d_max, config.path_loss_exponent));
}

LinkState make_link(double distance_km, double gamma, double tx_power) {
  LinkState link;
  link.distance_km = distance_km;
  link.pathloss = pathloss_gain(distance_km, gamma);
  link.tx_power = tx_power;
  return link;
}

void advance_frame(LinkState& link, const ChannelParams& params, double shadow_draw_dB,
                   double fading_gain) {
  if (link.shadow_frames_left <= 0) {
    link.shadow_gain_dB = shadow_draw_dB;
    link.shadow_frames_left = params.shadow_block_frames;
  }
  --link.shadow_frames_left;
  link.fading_gain = fading_gain;
  link.snr_linear = link.tx_power * link.pathloss * db_to_linear(link.shadow_gain_dB) * fading_gain /
                    params.noise_power;
}

void advance_frame(LinkState& link, const ChannelParams& params, RandomStream& rng) {
  const double shadow = link.shadow_frames_left <= 0
                            ? rng.normal(0.0, params.shadowing_sigma_dB)
                            : link.shadow_gain_dB;
  const double fading = rng.exponential(params.fading_mean_power);
  advance_frame(link, params, shadow, fading);
}

} // namespace uplink
