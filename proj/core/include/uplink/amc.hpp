#pragma once

#include "uplink/config.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace uplink {

enum class Modulation { QPSK, QAM16, QAM64 };

std::string_view to_string(Modulation scheme);

struct ModulationRow {
  Modulation scheme;
  double rate_bps;
  double spectral_eff; // R/B, bps/Hz
  double mod_index;
  double snr_th_dB;
};

/// Rows ascending by rate with strictly increasing thresholds.
struct ModulationTable {
  std::vector<ModulationRow> rows;
  double bandwidth_hz = 0.0;
  double ber = 0.0;

  double r_min_bps() const { return rows.front().rate_bps; }
  double min_threshold_dB() const { return rows.front().snr_th_dB; }
};

/// MQAM modulation index for a target BER: -ln(5 p_b)/1.5 below 4 bps/Hz,
/// -ln(0.5 p_b)/1.5 at or above. Throws std::domain_error outside
/// ber in (0,1), spectral_eff > 0.
double modulation_index(double ber, double spectral_eff);

/// Minimum SNR (dB) supporting `rate_bps` over `bandwidth_hz` at `ber`:
/// (2^{R/B} - 1) * MI. Throws std::domain_error if MI <= 0.
double snr_threshold(double rate_bps, double bandwidth_hz, double ber);

/// One row per rate, schemes assigned QPSK, 16-QAM, 64-QAM in rate order.
ModulationTable build_table(double bandwidth_hz, double ber,
                            const std::vector<double>& rates_bps = {40e6, 80e6, 120e6});

/// Highest rate whose threshold is <= snr_dB (inclusive). Fixed mode only ever
/// uses the lowest row. nullopt means not schedulable this frame.
std::optional<double> select_rate(double snr_dB, const ModulationTable& table, RateMode mode);

/// Inverse of the modulation-index bound: c * exp(-1.5 snr / (2^{R/B} - 1)),
/// c = 0.2 below 4 bps/Hz, 2 otherwise. Equals the table BER at threshold.
double bit_error_rate(double snr_linear, double spectral_eff);

} // namespace uplink
