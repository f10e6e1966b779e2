#include "uplink/amc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uplink {

namespace {

constexpr double kHighOrderSpectralEff = 4.0;

} // namespace

std::string_view to_string(Modulation scheme) {
  switch (scheme) {
  case Modulation::QPSK:
    return "QPSK";
  case Modulation::QAM16:
    return "16-QAM";
  case Modulation::QAM64:
    return "64-QAM";
  }
  return "?";
}

double modulation_index(double ber, double spectral_eff) {
  if (!(ber > 0.0 && ber < 1.0) || !(spectral_eff > 0.0)) {
    throw std::domain_error("modulation_index: need ber in (0,1) and spectral_eff > 0");
  }
  const double scale = spectral_eff < kHighOrderSpectralEff ? 5.0 : 0.5;
  return -std::log(scale * ber) / 1.5;
}

double snr_threshold(double rate_bps, double bandwidth_hz, double ber) {
  if (!(rate_bps > 0.0) || !(bandwidth_hz > 0.0)) {
    throw std::domain_error("snr_threshold: rate and bandwidth must be positive");
  }
  const double eff = rate_bps / bandwidth_hz;
  const double mi = modulation_index(ber, eff);
  if (!(mi > 0.0)) {
    throw std::domain_error("snr_threshold: non-positive modulation index");
  }
  return 10.0 * std::log10((std::exp2(eff) - 1.0) * mi);
}

ModulationTable build_table(double bandwidth_hz, double ber, const std::vector<double>& rates_bps) {
  constexpr Modulation kSchemes[] = {Modulation::QPSK, Modulation::QAM16, Modulation::QAM64};
  if (rates_bps.empty() || rates_bps.size() > std::size(kSchemes)) {
    throw std::domain_error("build_table: need 1 to 3 rates");
  }
  ModulationTable table;
  table.bandwidth_hz = bandwidth_hz;
  table.ber = ber;
  for (std::size_t i = 0; i < rates_bps.size(); ++i) {
    const double rate = rates_bps[i];
    const double eff = rate / bandwidth_hz;
    table.rows.push_back({kSchemes[i], rate, eff, modulation_index(ber, eff),
                          snr_threshold(rate, bandwidth_hz, ber)});
    if (i > 0 && !(table.rows[i].rate_bps > table.rows[i - 1].rate_bps &&
                   table.rows[i].snr_th_dB > table.rows[i - 1].snr_th_dB)) {
      throw std::domain_error("build_table: rates and thresholds must be strictly increasing");
    }
  }
  return table;
}

std::optional<double> select_rate(double snr_dB, const ModulationTable& table, RateMode mode) {
  if (table.rows.empty() || snr_dB < table.min_threshold_dB()) {
    return std::nullopt;
  }
  if (mode == RateMode::FixedQpsk) {
    return table.rows.front().rate_bps;
  }
  double rate = table.rows.front().rate_bps;
  for (const auto& row : table.rows) {
    if (row.snr_th_dB <= snr_dB) {
      rate = row.rate_bps;
    }
  }
  return rate;
}

double bit_error_rate(double snr_linear, double spectral_eff) {
  const double c = spectral_eff < kHighOrderSpectralEff ? 0.2 : 2.0;
  return std::min(0.5, c * std::exp(-1.5 * snr_linear / (std::exp2(spectral_eff) - 1.0)));
}

} // namespace uplink
