#ifndef LIDAR_EMI_SCHEDULE_HPP
#define LIDAR_EMI_SCHEDULE_HPP

#include <cstddef>
#include <vector>

#include "lidar_emi/config.hpp"
#include "lidar_emi/error.hpp"
#include "lidar_emi/geometry.hpp"

namespace lidar_emi {

/// One laser shot. `emit_time` is relative to the frame start.
struct FiringEvent {
  std::size_t cycle = 0;
  std::size_t slot = 0;
  std::size_t channel = 0;
  double emit_time = 0.0;  // [s]
  double azimuth = 0.0;    // [deg], [0, 360)
  double elevation = 0.0;  // [deg]
};

inline double slot_offset(const LidarConfig& cfg, std::size_t slot) {
  return static_cast<double>(slot) * cfg.firing_interval;
}

inline double cycle_start(const LidarConfig& cfg, std::size_t cycle) {
  return static_cast<double>(cycle) * cfg.cycle_period;
}

inline double azimuth_at(const LidarConfig& cfg, double t) { return wrap_degrees(cfg.angular_rate() * t); }

inline FiringEvent firing_event(const LidarConfig& cfg, std::size_t cycle, std::size_t slot) {
  FiringEvent ev;
  ev.cycle = cycle;
  ev.slot = slot;
  ev.channel = cfg.channel_at_slot(slot);
  ev.emit_time = cycle_start(cfg, cycle) + slot_offset(cfg, slot);
  ev.azimuth = azimuth_at(cfg, cfg.azimuth_mode == AzimuthMode::kPerFiring ? ev.emit_time : cycle_start(cfg, cycle));
  ev.elevation = cfg.vertical_angles[ev.channel];
  return ev;
}

/// Every firing of the whole cycles that fit in `duration`, in emission order.
inline std::vector<FiringEvent> firing_schedule(const LidarConfig& cfg, double duration) {
  cfg.validate();
  if (!(duration > 0.0)) throw DomainError("firing_schedule: duration must be positive");
  const std::size_t cycles = cfg.full_cycles(duration);
  std::vector<FiringEvent> events;
  events.reserve(cycles * cfg.num_channels);
  for (std::size_t k = 0; k < cycles; ++k)
    for (std::size_t s = 0; s < cfg.num_channels; ++s) events.push_back(firing_event(cfg, k, s));
  return events;
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_SCHEDULE_HPP
