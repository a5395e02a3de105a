#ifndef LIDAR_EMI_MONITORING_HPP
#define LIDAR_EMI_MONITORING_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "lidar_emi/emi.hpp"
#include "lidar_emi/random.hpp"

namespace lidar_emi {

/// Telemetry the sensor reports on its diagnostic interface.
struct MonitoringReadout {
  double temperature = 40.0;                     // [degC]
  std::vector<double> voltage_rails = {3.3, 5.0, 12.0};  // [V]
  double rpm = 600.0;
  double timestamp = 0.0;                        // [s]

  bool operator==(const MonitoringReadout&) const = default;
};

/**
 * When EMI coupled into a monitoring line crosses its threshold, the reading
 * on that line is replaced. Below the threshold the line reads the truth.
 */
struct PerturbationThresholds {
  double temperature_line = 0.01;  // coupled amplitude
  double voltage_line = 0.01;
  double encoder_line = 0.01;
  double corrupt_temp_min = -200.0;  // [degC]
  double corrupt_temp_max = 150.0;
  double rail_spread = 0.5;          // uniform +-50 % around nominal
  double rpm_floor = 19.0;
  double rpm_half_life_cycles = 5.0;
};

/// Encoder readout after `exposure` consecutive cycles of encoder-line
/// corruption: exponential decay toward the floor, reported in whole RPM.
inline double decayed_rpm(double preset, std::size_t exposure, const PerturbationThresholds& th) {
  const double decay = std::exp2(-static_cast<double>(exposure) / th.rpm_half_life_cycles);
  return std::round(th.rpm_floor + (preset - th.rpm_floor) * decay);
}

/// `encoder_exposure` counts consecutive corrupted cycles including this one.
inline MonitoringReadout perturb_monitoring(const MonitoringReadout& truth, const EmiSource* emi,
                                            const CouplingChannel& channel, const PerturbationThresholds& th,
                                            std::uint64_t seed, std::size_t encoder_exposure = 1) {
  MonitoringReadout out = truth;
  if (emi == nullptr) return out;
  SplitMix64 rng(derive_seed(seed, {0x7e11}));
  if (coupled_amplitude_or_zero(*emi, channel, Surface::kTemperatureLine) >= th.temperature_line)
    out.temperature = th.corrupt_temp_min + (th.corrupt_temp_max - th.corrupt_temp_min) * rng.uniform();
  if (coupled_amplitude_or_zero(*emi, channel, Surface::kVoltageLine) >= th.voltage_line)
    for (auto& v : out.voltage_rails) v *= 1.0 + th.rail_spread * (2.0 * rng.uniform() - 1.0);
  if (coupled_amplitude_or_zero(*emi, channel, Surface::kEncoderLine) >= th.encoder_line)
    out.rpm = decayed_rpm(truth.rpm, std::max<std::size_t>(encoder_exposure, 1), th);
  return out;
}

inline bool encoder_corrupted(const EmiSource* emi, const CouplingChannel& channel, const PerturbationThresholds& th) {
  return emi != nullptr && coupled_amplitude_or_zero(*emi, channel, Surface::kEncoderLine) >= th.encoder_line;
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_MONITORING_HPP
