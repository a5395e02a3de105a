#ifndef LIDAR_EMI_FDD_HPP
#define LIDAR_EMI_FDD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lidar_emi/error.hpp"
#include "lidar_emi/kv_config.hpp"
#include "lidar_emi/monitoring.hpp"

namespace lidar_emi {

enum class LidarState { kInitialization, kNormal, kWarning, kPowerOff };
enum class FaultLevel { kL1, kL2 };
enum class FaultCode { kTempOutOfRange, kVoltageOutOfRange, kRpmDeviation, kSelfCheckFail };

inline constexpr std::array<LidarState, 4> kAllStates = {LidarState::kInitialization, LidarState::kNormal,
                                                         LidarState::kWarning, LidarState::kPowerOff};
inline constexpr std::array<FaultCode, 4> kAllFaultCodes = {FaultCode::kTempOutOfRange, FaultCode::kVoltageOutOfRange,
                                                            FaultCode::kRpmDeviation, FaultCode::kSelfCheckFail};

inline std::string_view to_string(LidarState s) {
  switch (s) {
    case LidarState::kInitialization: return "Initialization";
    case LidarState::kNormal: return "Normal";
    case LidarState::kWarning: return "Warning";
    case LidarState::kPowerOff: return "PowerOff";
  }
  return "?";
}

inline std::string_view to_string(FaultLevel l) { return l == FaultLevel::kL1 ? "L1" : "L2"; }

inline std::string_view to_string(FaultCode c) {
  switch (c) {
    case FaultCode::kTempOutOfRange: return "TempOutOfRange";
    case FaultCode::kVoltageOutOfRange: return "VoltageOutOfRange";
    case FaultCode::kRpmDeviation: return "RpmDeviation";
    case FaultCode::kSelfCheckFail: return "SelfCheckFail";
  }
  return "?";
}

/// Fault table: out-of-range telemetry is L1, loss of rotation or a failed
/// self-check is L2.
constexpr FaultLevel level_of(FaultCode c) {
  return (c == FaultCode::kRpmDeviation || c == FaultCode::kSelfCheckFail) ? FaultLevel::kL2 : FaultLevel::kL1;
}

/// L1 faults whose presence marks the cycle's points invalid.
constexpr bool invalidates_points(FaultCode c) {
  return c == FaultCode::kTempOutOfRange || c == FaultCode::kVoltageOutOfRange;
}

struct FaultEvent {
  FaultLevel level = FaultLevel::kL1;
  FaultCode code = FaultCode::kTempOutOfRange;
  std::string source;
  double timestamp = 0.0;

  bool operator==(const FaultEvent&) const = default;
};

inline FaultEvent make_fault(FaultCode code, double timestamp = 0.0, std::string source = {}) {
  return FaultEvent{level_of(code), code, std::move(source), timestamp};
}

/// Default thresholds are declared assumptions, not datasheet values.
struct FddThresholds {
  double temp_min = -20.0;       // [degC]
  double temp_max = 90.0;
  std::vector<double> nominal_rails = {3.3, 5.0, 12.0};
  double rail_tolerance = 0.10;  // fraction of nominal
  double rpm_deviation = 0.5;    // fraction of preset
  double init_rpm_tolerance = 0.05;
};

/**
 * Four-state fault detection and diagnostic machine.
 *
 * A fault becomes active after `debounce` consecutive violating readouts and
 * clears after `debounce` consecutive clean ones. The machine is a value:
 * observe() and step() return updated copies.
 */
struct FddMachine {
  LidarState state = LidarState::kInitialization;
  FddThresholds thresholds;
  std::size_t debounce = 3;
  double preset_rpm = 600.0;

  std::array<std::size_t, 4> violation_streak{};
  std::array<std::size_t, 4> clean_streak{};
  std::array<bool, 4> active{};
  std::size_t warning_clean_cycles = 0;
  std::optional<double> last_rpm;

  bool operator==(const FddMachine&) const = default;
};

namespace detail {
inline std::size_t index_of(FaultCode c) { return static_cast<std::size_t>(c); }
}  // namespace detail

/// Threshold checks on a single readout, before debouncing.
inline std::array<bool, 4> raw_violations(const MonitoringReadout& r, const FddMachine& m) {
  std::array<bool, 4> v{};
  const auto& th = m.thresholds;
  v[detail::index_of(FaultCode::kTempOutOfRange)] = r.temperature < th.temp_min || r.temperature > th.temp_max;
  bool rail_bad = false;
  for (std::size_t i = 0; i < r.voltage_rails.size() && i < th.nominal_rails.size(); ++i) {
    const double nominal = th.nominal_rails[i];
    rail_bad = rail_bad || std::abs(r.voltage_rails[i] - nominal) > th.rail_tolerance * std::abs(nominal);
  }
  v[detail::index_of(FaultCode::kVoltageOutOfRange)] = rail_bad;
  v[detail::index_of(FaultCode::kRpmDeviation)] = std::abs(r.rpm - m.preset_rpm) / m.preset_rpm > th.rpm_deviation;
  return v;
}

/// Folds one readout into the debounce counters.
inline FddMachine observe(const FddMachine& m, const MonitoringReadout& r) {
  FddMachine out = m;
  const auto v = raw_violations(r, m);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i]) {
      ++out.violation_streak[i];
      out.clean_streak[i] = 0;
      if (out.violation_streak[i] >= out.debounce) out.active[i] = true;
    } else {
      out.violation_streak[i] = 0;
      ++out.clean_streak[i];
      if (out.clean_streak[i] >= out.debounce) out.active[i] = false;
    }
  }
  out.last_rpm = r.rpm;
  return out;
}

inline std::vector<FaultEvent> active_faults(const FddMachine& m, double timestamp) {
  std::vector<FaultEvent> out;
  for (const auto code : kAllFaultCodes)
    if (m.active[detail::index_of(code)]) out.push_back(make_fault(code, timestamp, "monitoring"));
  return out;
}

/// Faults active once `readout` has been taken into account.
inline std::vector<FaultEvent> classify_faults(const MonitoringReadout& readout, const FddMachine& m) {
  return active_faults(observe(m, readout), readout.timestamp);
}

/// State transition for one diagnostic cycle.
inline FddMachine step(const FddMachine& m, std::span<const FaultEvent> faults) {
  FddMachine out = m;
  if (m.state == LidarState::kPowerOff) return out;

  const bool any_l2 = std::any_of(faults.begin(), faults.end(), [](const auto& f) { return f.level == FaultLevel::kL2; });
  const bool any_l1 = std::any_of(faults.begin(), faults.end(), [](const auto& f) { return f.level == FaultLevel::kL1; });
  if (any_l2) {
    out.state = LidarState::kPowerOff;
    return out;
  }

  switch (m.state) {
    case LidarState::kInitialization:
      if (any_l1) {
        out.state = LidarState::kWarning;
        out.warning_clean_cycles = 0;
      } else if (m.last_rpm &&
                 std::abs(*m.last_rpm - m.preset_rpm) <= m.thresholds.init_rpm_tolerance * m.preset_rpm) {
        out.state = LidarState::kNormal;
      }
      break;
    case LidarState::kNormal:
      if (any_l1) {
        out.state = LidarState::kWarning;
        out.warning_clean_cycles = 0;
      }
      break;
    case LidarState::kWarning:
      if (faults.empty()) {
        if (++out.warning_clean_cycles >= m.debounce) {
          out.state = LidarState::kNormal;
          out.warning_clean_cycles = 0;
        }
      } else {
        out.warning_clean_cycles = 0;
      }
      break;
    case LidarState::kPowerOff:
      break;
  }
  return out;
}

inline FddMachine step(const FddMachine& m, std::initializer_list<FaultEvent> faults) {
  return step(m, std::span<const FaultEvent>(faults.begin(), faults.size()));
}

/// Unconditional restart into Initialization with all counters cleared.
inline FddMachine reboot(const FddMachine& m) {
  FddMachine out;
  out.thresholds = m.thresholds;
  out.debounce = m.debounce;
  out.preset_rpm = m.preset_rpm;
  return out;
}

struct CycleDiagnosis {
  FddMachine machine;
  std::vector<FaultEvent> faults;
};

/// observe + classify + step for one monitoring readout.
inline CycleDiagnosis diagnose(const FddMachine& m, const MonitoringReadout& readout) {
  if (m.state == LidarState::kPowerOff) return {m, {}};
  const FddMachine observed = observe(m, readout);
  auto faults = active_faults(observed, readout.timestamp);
  return {step(observed, faults), std::move(faults)};
}

/// Victim health model: monitoring truth, EMI corruption thresholds and the
/// diagnostic machine's settings, read from one key/value file.
struct HealthConfig {
  MonitoringReadout nominal;
  PerturbationThresholds perturbation;
  FddMachine machine;
};

/**
 * Keys: monitor.temperature, monitor.voltage_rails,
 * perturbation.{temperature_line, voltage_line, encoder_line, temp_min,
 * temp_max, rail_spread, rpm_floor, rpm_half_life_cycles},
 * fdd.{temp_min, temp_max, rail_tolerance, rpm_deviation,
 * init_rpm_tolerance, debounce}. Rail nominals follow monitor.voltage_rails.
 */
inline HealthConfig parse_health_config(const KvDocument& doc, double preset_rpm = 600.0) {
  HealthConfig h;
  h.nominal.rpm = preset_rpm;
  h.machine.preset_rpm = preset_rpm;
  for (const auto& e : doc.entries()) {
    const auto& k = e.key;
    if (k == "monitor.temperature") h.nominal.temperature = doc.number(e);
    else if (k == "monitor.voltage_rails") h.nominal.voltage_rails = doc.numbers(e);
    else if (k == "perturbation.temperature_line") h.perturbation.temperature_line = doc.number(e);
    else if (k == "perturbation.voltage_line") h.perturbation.voltage_line = doc.number(e);
    else if (k == "perturbation.encoder_line") h.perturbation.encoder_line = doc.number(e);
    else if (k == "perturbation.temp_min") h.perturbation.corrupt_temp_min = doc.number(e);
    else if (k == "perturbation.temp_max") h.perturbation.corrupt_temp_max = doc.number(e);
    else if (k == "perturbation.rail_spread") h.perturbation.rail_spread = doc.number(e);
    else if (k == "perturbation.rpm_floor") h.perturbation.rpm_floor = doc.number(e);
    else if (k == "perturbation.rpm_half_life_cycles") h.perturbation.rpm_half_life_cycles = doc.number(e);
    else if (k == "fdd.temp_min") h.machine.thresholds.temp_min = doc.number(e);
    else if (k == "fdd.temp_max") h.machine.thresholds.temp_max = doc.number(e);
    else if (k == "fdd.rail_tolerance") h.machine.thresholds.rail_tolerance = doc.number(e);
    else if (k == "fdd.rpm_deviation") h.machine.thresholds.rpm_deviation = doc.number(e);
    else if (k == "fdd.init_rpm_tolerance") h.machine.thresholds.init_rpm_tolerance = doc.number(e);
    else if (k == "fdd.debounce") h.machine.debounce = doc.count(e);
    else doc.unknown(e);
  }
  h.machine.thresholds.nominal_rails = h.nominal.voltage_rails;
  if (h.machine.debounce == 0) throw ConfigError(doc.source() + ": fdd.debounce must be at least 1");
  if (!(h.perturbation.rpm_half_life_cycles > 0.0))
    throw ConfigError(doc.source() + ": perturbation.rpm_half_life_cycles must be positive");
  return h;
}

inline HealthConfig load_health_config(const std::string& path, double preset_rpm = 600.0) {
  return parse_health_config(KvDocument::load(path), preset_rpm);
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_FDD_HPP
