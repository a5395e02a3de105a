#ifndef LIDAR_EMI_CONFIG_HPP
#define LIDAR_EMI_CONFIG_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lidar_emi/error.hpp"
#include "lidar_emi/kv_config.hpp"

namespace lidar_emi {

/// Speed of light used by every ranging computation [m/s].
inline constexpr double kSpeedOfLight = 299'792'458.0;

enum class AzimuthMode {
  kPerFiring,  ///< azimuth sampled at each firing instant (continuous rotation)
  kPerCycle,   ///< azimuth frozen at the start of each firing cycle
};

/**
 * Timing, rotation and receiver parameters of a spinning ToF LiDAR.
 *
 * Defaults describe a VLP-16 class sensor: 16 channels fired every 2.304 us,
 * followed by an 18.432 us recharge, for a 55.296 us firing cycle.
 * Amplitudes are normalized so that a unit-reflectivity target at 1 m
 * returns a peak of 1.0.
 */
struct LidarConfig {
  std::string id = "vlp16";
  std::size_t num_channels = 16;
  /// Elevation of each channel [deg], indexed by channel.
  std::vector<double> vertical_angles = {-15, 1, -13, 3, -11, 5, -9, 7, -7, 9, -5, 11, -3, 13, -1, 15};
  /// firing_order[slot] is the channel fired in that slot of the cycle.
  /// Empty means sequential 0..num_channels-1.
  std::vector<std::size_t> firing_order;
  double rpm = 600.0;
  double firing_interval = 2.304e-6;   // [s]
  double cycle_period = 55.296e-6;     // [s]
  double recharge_period = 18.432e-6;  // [s]
  double pulse_width = 10e-9;          // FWHM [s]
  double adc_sample_rate = 500e6;      // [Hz]
  double sim_sample_rate = 20e9;       // [Hz]
  double max_range = 100.0;            // [m]
  double range_accuracy = 0.02;        // [m]
  double detection_threshold = 5e-7;
  double receiver_saturation = 1.0;
  /// Receiver white-noise sigma; unset means 0.2 * detection_threshold.
  std::optional<double> noise_sigma;
  AzimuthMode azimuth_mode = AzimuthMode::kPerFiring;

  double noise_floor() const { return noise_sigma.value_or(0.2 * detection_threshold); }
  double revolution_period() const { return 60.0 / rpm; }
  /// Azimuth rate [deg/s].
  double angular_rate() const { return rpm / 60.0 * 360.0; }
  double cycle_azimuth_advance() const { return angular_rate() * cycle_period; }

  std::size_t channel_at_slot(std::size_t slot) const { return firing_order.empty() ? slot : firing_order[slot]; }

  std::size_t slot_of_channel(std::size_t channel) const {
    if (firing_order.empty()) return channel;
    for (std::size_t s = 0; s < firing_order.size(); ++s)
      if (firing_order[s] == channel) return s;
    throw ConfigError("channel " + std::to_string(channel) + " is not in the firing order");
  }

  /// Number of whole firing cycles that fit in `duration`.
  std::size_t full_cycles(double duration) const {
    return static_cast<std::size_t>(std::floor(duration / cycle_period * (1.0 + 1e-12)));
  }

  std::size_t cycles_per_revolution() const { return full_cycles(revolution_period()); }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be strictly positive");
    };
    if (num_channels == 0) throw ConfigError("num_channels must be strictly positive");
    positive(rpm, "rpm");
    positive(firing_interval, "firing_interval");
    positive(cycle_period, "cycle_period");
    positive(recharge_period, "recharge_period");
    positive(pulse_width, "pulse_width");
    positive(adc_sample_rate, "adc_sample_rate");
    positive(sim_sample_rate, "sim_sample_rate");
    positive(max_range, "max_range");
    positive(range_accuracy, "range_accuracy");
    positive(receiver_saturation, "receiver_saturation");
    if (vertical_angles.size() != num_channels)
      throw ConfigError("vertical_angles has " + std::to_string(vertical_angles.size()) + " entries, expected " +
                        std::to_string(num_channels));
    const double closure = static_cast<double>(num_channels) * firing_interval + recharge_period;
    if (std::abs(closure - cycle_period) > 1e-9 * cycle_period)
      throw ConfigError("num_channels * firing_interval + recharge_period must equal cycle_period");
    if (!(adc_sample_rate < sim_sample_rate)) throw ConfigError("adc_sample_rate must be below sim_sample_rate");
    if (!(detection_threshold > 0.0 && detection_threshold < 1.0))
      throw ConfigError("detection_threshold must lie in (0, 1)");
    if (receiver_saturation < detection_threshold)
      throw ConfigError("receiver_saturation must be >= detection_threshold");
    if (noise_sigma && !(*noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    if (!firing_order.empty()) {
      if (firing_order.size() != num_channels) throw ConfigError("firing_order must list every channel once");
      std::vector<bool> seen(num_channels, false);
      for (const auto c : firing_order) {
        if (c >= num_channels || seen[c]) throw ConfigError("firing_order must be a permutation of the channels");
        seen[c] = true;
      }
    }
  }
};

/// Reads a LidarConfig from the key/value grammar. Keys match the field
/// names; `azimuth_mode` takes `per_firing` or `per_cycle`.
inline LidarConfig parse_lidar_config(const KvDocument& doc) {
  LidarConfig cfg;
  bool angles_given = false;
  for (const auto& e : doc.entries()) {
    const auto& k = e.key;
    if (k == "id") cfg.id = e.value;
    else if (k == "num_channels") cfg.num_channels = doc.count(e);
    else if (k == "vertical_angles") { cfg.vertical_angles = doc.numbers(e); angles_given = true; }
    else if (k == "firing_order") {
      cfg.firing_order.clear();
      for (const double v : doc.numbers(e)) {
        if (v < 0.0 || v != std::floor(v)) doc.fail(e.line, "firing_order entries must be channel indices");
        cfg.firing_order.push_back(static_cast<std::size_t>(v));
      }
    }
    else if (k == "rpm") cfg.rpm = doc.number(e);
    else if (k == "firing_interval") cfg.firing_interval = doc.number(e);
    else if (k == "cycle_period") cfg.cycle_period = doc.number(e);
    else if (k == "recharge_period") cfg.recharge_period = doc.number(e);
    else if (k == "pulse_width") cfg.pulse_width = doc.number(e);
    else if (k == "adc_sample_rate") cfg.adc_sample_rate = doc.number(e);
    else if (k == "sim_sample_rate") cfg.sim_sample_rate = doc.number(e);
    else if (k == "max_range") cfg.max_range = doc.number(e);
    else if (k == "range_accuracy") cfg.range_accuracy = doc.number(e);
    else if (k == "detection_threshold") cfg.detection_threshold = doc.number(e);
    else if (k == "receiver_saturation") cfg.receiver_saturation = doc.number(e);
    else if (k == "noise_sigma") cfg.noise_sigma = doc.number(e);
    else if (k == "azimuth_mode") {
      if (e.value == "per_firing") cfg.azimuth_mode = AzimuthMode::kPerFiring;
      else if (e.value == "per_cycle") cfg.azimuth_mode = AzimuthMode::kPerCycle;
      else doc.fail(e.line, "azimuth_mode must be per_firing or per_cycle");
    }
    else doc.unknown(e);
  }
  if (!angles_given && cfg.num_channels != cfg.vertical_angles.size())
    throw ConfigError(doc.source() + ": vertical_angles required when num_channels differs from the default");
  cfg.validate();
  return cfg;
}

inline LidarConfig load_lidar_config(const std::string& path) { return parse_lidar_config(KvDocument::load(path)); }

}  // namespace lidar_emi

#endif  // LIDAR_EMI_CONFIG_HPP
