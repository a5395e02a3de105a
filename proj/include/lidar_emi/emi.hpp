#ifndef LIDAR_EMI_EMI_HPP
#define LIDAR_EMI_EMI_HPP

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lidar_emi/config.hpp"
#include "lidar_emi/error.hpp"
#include "lidar_emi/kv_config.hpp"
#include "lidar_emi/waveform.hpp"

namespace lidar_emi {

/// Victim conductors that act as unintentional receiving antennas.
enum class Surface { kReceiverTrace, kTemperatureLine, kVoltageLine, kEncoderLine };

inline constexpr std::array<Surface, 4> kAllSurfaces = {Surface::kReceiverTrace, Surface::kTemperatureLine,
                                                        Surface::kVoltageLine, Surface::kEncoderLine};

inline std::string_view to_string(Surface s) {
  switch (s) {
    case Surface::kReceiverTrace: return "receiver_trace";
    case Surface::kTemperatureLine: return "temperature_line";
    case Surface::kVoltageLine: return "voltage_line";
    case Surface::kEncoderLine: return "encoder_line";
  }
  return "?";
}

inline Surface parse_surface(std::string_view name) {
  for (const auto s : kAllSurfaces)
    if (to_string(s) == name) return s;
  throw LookupError("unknown attack surface '" + std::string(name) + "'");
}

struct CwModulation {};

struct AmModulation {
  Baseband baseband;
  double depth = 0.5;
  double bias = 0.5;
};

/// Attacker transmit chain: signal generator, power amplifier, antenna.
struct EmiSource {
  double carrier_freq = 1e9;            // [Hz]
  double generator_power_dbm = 0.0;     // [dBm]
  double amplifier_gain_db = 56.0;      // [dB]
  double amplifier_max_power_w = 50.0;  // [W] saturation ceiling
  double antenna_gain_dbi = 0.0;        // [dBi]
  double distance = 0.3;                // [m]
  std::variant<CwModulation, AmModulation> modulation;
  double initial_phase = 0.0;           // [rad]

  bool is_cw() const { return std::holds_alternative<CwModulation>(modulation); }

  /// min(generator + gain, ceiling) in dBm.
  double output_power_dbm() const {
    const double ceiling = 10.0 * std::log10(amplifier_max_power_w * 1000.0);
    return std::min(generator_power_dbm + amplifier_gain_db, ceiling);
  }

  /// Unit-amplitude carrier sin(2 pi f t + phi0); phase is continuous in
  /// absolute simulation time.
  double carrier(double t) const {
    const double cycles = carrier_freq * t;
    const double frac = cycles - std::floor(cycles);
    return std::sin(2.0 * std::numbers::pi * frac + initial_phase);
  }

  /// AM envelope bias + depth * b(t); 1 for an unmodulated carrier.
  double envelope(double t) const {
    if (const auto* am = std::get_if<AmModulation>(&modulation))
      return am->bias + am->depth * baseband_value(am->baseband, t);
    return 1.0;
  }

  double emitted(double t) const { return envelope(t) * carrier(t); }

  void validate() const {
    if (!(carrier_freq >= 0.0) || !std::isfinite(carrier_freq)) throw DomainError("carrier_freq must be >= 0");
    if (!(distance > 0.0)) throw DomainError("EMI source distance must be positive");
    if (!(amplifier_max_power_w > 0.0)) throw DomainError("amplifier_max_power_w must be positive");
  }
};

/// Lorentzian coupling response of one conductor resonance.
struct Resonance {
  double center = 1e9;       // [Hz]
  double width = 10e6;       // full width at half response [Hz]
  double peak_gain_db = 0.0;

  double gain(double f) const {
    const double x = (f - center) / (width / 2.0);
    return std::pow(10.0, peak_gain_db / 20.0) / (1.0 + x * x);
  }
};

struct SurfaceCoupling {
  std::vector<Resonance> resonances;
  /// Baseband produced by front-end rectification of the coupled RF,
  /// relative to the linear pickup. The coupled signal at the surface is
  /// a * envelope(t) * (carrier(t) + demodulation).
  double demodulation = 0.0;

  /// Linear amplitude gain: max over the Lorentzian responses.
  double gain(double f) const {
    double g = 0.0;
    for (const auto& r : resonances) g = std::max(g, r.gain(f));
    return g;
  }
};

/// Frequency-dependent path from the attacker's antenna into each surface,
/// with log-distance path loss.
struct CouplingChannel {
  std::map<Surface, SurfaceCoupling> surfaces;
  double path_loss_exponent = 2.0;
  double reference_loss_db = 40.0;  // at 1 m

  bool has(Surface s) const { return surfaces.contains(s); }

  const SurfaceCoupling& surface(Surface s) const {
    const auto it = surfaces.find(s);
    if (it == surfaces.end()) throw LookupError("surface '" + std::string(to_string(s)) + "' is not in the channel");
    return it->second;
  }

  double path_loss_db(double distance) const {
    return reference_loss_db + 10.0 * path_loss_exponent * std::log10(distance);
  }

  void validate() const {
    for (const auto& [s, c] : surfaces) {
      for (const auto& r : c.resonances)
        if (!(r.width > 0.0)) throw ConfigError("resonance width must be positive");
      if (!(c.demodulation >= 0.0)) throw ConfigError("demodulation must be non-negative");
    }
  }
};

/// Normalized carrier amplitude arriving at `surface`.
inline double coupled_amplitude(const EmiSource& emi, const CouplingChannel& channel, Surface surface) {
  const auto& coupling = channel.surface(surface);
  emi.validate();
  const double received_dbm = emi.output_power_dbm() + emi.antenna_gain_dbi - channel.path_loss_db(emi.distance);
  const double field = std::sqrt(std::pow(10.0, (received_dbm - 30.0) / 10.0));
  return field * coupling.gain(emi.carrier_freq);
}

/// Zero when the surface is absent from the channel.
inline double coupled_amplitude_or_zero(const EmiSource& emi, const CouplingChannel& channel, Surface surface) {
  return channel.has(surface) ? coupled_amplitude(emi, channel, surface) : 0.0;
}

/// Frequency band in which a conductor of length `trace_length` couples
/// best: [c / 50l, c / 2l].
inline std::pair<double, double> estimate_band(double trace_length) {
  if (!(trace_length > 0.0)) throw DomainError("estimate_band: trace length must be positive");
  const double hi = kSpeedOfLight / (2.0 * trace_length);
  return {hi / 25.0, hi};
}

/**
 * Channel file keys:
 *
 *   path_loss_exponent   = 2
 *   reference_loss_db    = 40
 *   surface              = encoder_line               # declare without resonances
 *   resonance.<surface>  = center_hz width_hz peak_gain_db   (repeatable)
 *   demodulation.<surface> = ratio
 */
inline CouplingChannel parse_channel(const KvDocument& doc) {
  CouplingChannel ch;
  for (const auto& e : doc.entries()) {
    try {
      if (e.key == "path_loss_exponent") ch.path_loss_exponent = doc.number(e);
      else if (e.key == "reference_loss_db") ch.reference_loss_db = doc.number(e);
      else if (e.key == "surface") ch.surfaces[parse_surface(e.value)];
      else if (e.key.starts_with("resonance.")) {
        const auto v = doc.numbers(e);
        if (v.size() != 3) doc.fail(e.line, "resonance expects center_hz width_hz peak_gain_db");
        ch.surfaces[parse_surface(e.key.substr(10))].resonances.push_back({v[0], v[1], v[2]});
      } else if (e.key.starts_with("demodulation.")) {
        ch.surfaces[parse_surface(e.key.substr(13))].demodulation = doc.number(e);
      } else {
        doc.unknown(e);
      }
    } catch (const LookupError& err) {
      doc.fail(e.line, err.what());
    }
  }
  ch.validate();
  return ch;
}

inline CouplingChannel load_channel(const std::string& path) { return parse_channel(KvDocument::load(path)); }

/// EMI profile files describe a CW source; AM sources are built by the
/// attack planner.
inline EmiSource parse_emi_source(const KvDocument& doc) {
  EmiSource emi;
  for (const auto& e : doc.entries()) {
    if (e.key == "carrier_freq") emi.carrier_freq = doc.number(e);
    else if (e.key == "generator_power_dbm") emi.generator_power_dbm = doc.number(e);
    else if (e.key == "amplifier_gain_db") emi.amplifier_gain_db = doc.number(e);
    else if (e.key == "amplifier_max_power_w") emi.amplifier_max_power_w = doc.number(e);
    else if (e.key == "antenna_gain_dbi") emi.antenna_gain_dbi = doc.number(e);
    else if (e.key == "distance") emi.distance = doc.number(e);
    else if (e.key == "initial_phase") emi.initial_phase = doc.number(e);
    else if (e.key == "modulation") {
      if (e.value != "cw") doc.fail(e.line, "only 'cw' modulation can be given in a profile");
    } else {
      doc.unknown(e);
    }
  }
  try {
    emi.validate();
  } catch (const DomainError& err) {
    throw ConfigError(doc.source() + ": " + err.what());
  }
  return emi;
}

inline EmiSource load_emi_source(const std::string& path) { return parse_emi_source(KvDocument::load(path)); }

}  // namespace lidar_emi

#endif  // LIDAR_EMI_EMI_HPP
