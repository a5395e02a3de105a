#ifndef LIDAR_EMI_SCAN_HPP
#define LIDAR_EMI_SCAN_HPP

#include <algorithm>
#include <optional>
#include <vector>

#include "lidar_emi/config.hpp"
#include "lidar_emi/emi.hpp"
#include "lidar_emi/fdd.hpp"
#include "lidar_emi/monitoring.hpp"
#include "lidar_emi/point_cloud.hpp"
#include "lidar_emi/random.hpp"
#include "lidar_emi/scene.hpp"
#include "lidar_emi/schedule.hpp"
#include "lidar_emi/signal_chain.hpp"

namespace lidar_emi {

struct ScanOptions {
  /// Frame length; zero means one revolution.
  double duration = 0.0;
  std::size_t frame_index = 0;
  /// Absolute time of the frame start, used for carrier phase and baseband timing.
  double frame_origin = 0.0;
  MonitoringReadout nominal;
  PerturbationThresholds perturbation;
};

struct ScanResult {
  PointCloud cloud;
  std::vector<MonitoringReadout> readouts;  ///< one per simulated cycle
  std::vector<LidarState> states;           ///< state after each cycle's diagnosis
  std::vector<std::vector<FaultEvent>> faults;
  FddMachine machine;

  LidarState final_state() const { return machine.state; }
};

/// One shot through the receive chain; nullopt when nothing is detected
/// inside the range gate.
inline std::optional<Point> fire(const FiringEvent& ev, const Scene& scene, const LidarConfig& cfg,
                                 const Receiver& receiver, double frame_origin, SplitMix64* rng) {
  const Vec3 dir = beam_direction(ev.elevation, ev.azimuth);
  const double t0 = frame_origin + ev.emit_time;
  std::optional<EchoReturn> echo;
  if (const auto hit = cast_ray(scene, Vec3{}, dir, cfg.max_range))
    echo = EchoReturn{t0 + round_trip_time(hit->range), echo_intensity(hit->range, hit->reflectivity)};
  const Waveform w = receiver.acquire(t0, echo, rng);
  const auto det = receiver.detect(w);
  if (!det) return std::nullopt;
  const double r = range_from_tof(t0, det->tau1);
  if (r > cfg.max_range) return std::nullopt;
  Point p;
  p.r = r;
  p.theta = 90.0 - ev.elevation;
  p.phi = ev.azimuth;
  p.intensity = std::clamp(det->peak_amplitude, 0.0, 1.0);
  p.ray = RayId{ev.cycle, static_cast<std::uint32_t>(ev.channel)};
  return p;
}

/**
 * Simulates one frame.
 *
 * Per cycle: the monitoring readout is sampled and perturbed, the FDD machine
 * is stepped, then the cycle's firings run through the receive chain. Points
 * are emitted in Normal (and Warning without an active point-invalidating
 * fault), flagged invalid in Warning with an active L1 telemetry fault, and
 * the frame stops as soon as PowerOff is entered. Noise streams are derived
 * per (seed, cycle, channel), so a benign and an attacked frame with the same
 * seed see the same receiver noise.
 */
inline ScanResult scan_frame(const Scene& scene, const LidarConfig& cfg, const EmiSource* emi,
                             const CouplingChannel& channel, FddMachine fdd, std::uint64_t seed,
                             const ScanOptions& opt = {}) {
  cfg.validate();
  scene.validate();
  channel.validate();
  if (emi != nullptr) emi->validate();

  ScanResult out;
  out.cloud.frame_index = opt.frame_index;
  out.cloud.config_id = cfg.id;
  const double duration = opt.duration > 0.0 ? opt.duration : cfg.revolution_period();
  const std::size_t cycles = cfg.full_cycles(duration);
  const Receiver receiver(cfg, emi, channel);
  const bool encoder_hit = encoder_corrupted(emi, channel, opt.perturbation);

  if (fdd.state == LidarState::kPowerOff) {
    out.states.push_back(fdd.state);
    out.machine = fdd;
    return out;
  }

  out.cloud.points.reserve(cycles * cfg.num_channels);
  std::size_t exposure = 0;
  for (std::size_t k = 0; k < cycles; ++k) {
    MonitoringReadout truth = opt.nominal;
    truth.rpm = opt.nominal.rpm;
    truth.timestamp = opt.frame_origin + cycle_start(cfg, k);
    exposure = encoder_hit ? exposure + 1 : 0;
    const auto readout =
        perturb_monitoring(truth, emi, channel, opt.perturbation, derive_seed(seed, {0x6d6f6e, k}), exposure);
    out.readouts.push_back(readout);

    auto diag = diagnose(fdd, readout);
    fdd = std::move(diag.machine);
    out.states.push_back(fdd.state);
    out.faults.push_back(diag.faults);
    if (fdd.state == LidarState::kPowerOff) break;

    const bool invalidate =
        fdd.state == LidarState::kWarning &&
        std::any_of(diag.faults.begin(), diag.faults.end(), [](const auto& f) { return invalidates_points(f.code); });

    for (std::size_t s = 0; s < cfg.num_channels; ++s) {
      const FiringEvent ev = firing_event(cfg, k, s);
      SplitMix64 rng(derive_seed(seed, {k, ev.channel}));
      auto point = fire(ev, scene, cfg, receiver, opt.frame_origin, &rng);
      if (!point) continue;
      point->valid = !invalidate;
      out.cloud.points.push_back(*point);
    }
  }
  out.machine = fdd;
  return out;
}

inline ScanResult scan_frame(const Scene& scene, const LidarConfig& cfg, const std::optional<EmiSource>& emi,
                             const CouplingChannel& channel, FddMachine fdd, std::uint64_t seed,
                             const ScanOptions& opt = {}) {
  return scan_frame(scene, cfg, emi ? &*emi : nullptr, channel, std::move(fdd), seed, opt);
}

/// Machine preset for `cfg`, in Initialization.
inline FddMachine fresh_machine(const LidarConfig& cfg, const FddMachine& settings = {}) {
  FddMachine m = reboot(settings);
  m.preset_rpm = cfg.rpm;
  return m;
}

/// Options whose monitoring truth matches `cfg` and `health`.
inline ScanOptions scan_options(const LidarConfig& cfg, const HealthConfig& health = {}, double duration = 0.0) {
  ScanOptions o;
  o.duration = duration;
  o.nominal = health.nominal;
  o.nominal.rpm = cfg.rpm;
  o.perturbation = health.perturbation;
  return o;
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_SCAN_HPP
