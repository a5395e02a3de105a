#ifndef LIDAR_EMI_ATTACK_HPP
#define LIDAR_EMI_ATTACK_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lidar_emi/config.hpp"
#include "lidar_emi/emi.hpp"
#include "lidar_emi/error.hpp"
#include "lidar_emi/metrics.hpp"
#include "lidar_emi/random.hpp"
#include "lidar_emi/scan.hpp"
#include "lidar_emi/scene.hpp"
#include "lidar_emi/schedule.hpp"
#include "lidar_emi/signal_chain.hpp"
#include "lidar_emi/waveform.hpp"

namespace lidar_emi {

/// One point the attacker wants the victim to report.
struct SpoofTarget {
  std::size_t channel = 0;
  double azimuth = 0.0;  // [deg]
  double range = 0.0;    // [m]
  std::optional<double> amplitude;

  double pulse_amplitude() const { return amplitude.value_or(1.0); }

  void validate(const LidarConfig& cfg) const {
    if (channel >= cfg.num_channels) throw DomainError("spoof target channel out of range");
    if (!(range > 0.0 && range <= cfg.max_range)) throw DomainError("spoof target range must be in (0, max_range]");
    if (!std::isfinite(azimuth)) throw DomainError("spoof target azimuth must be finite");
    if (amplitude && !(*amplitude > 0.0 && *amplitude <= 1.0)) throw DomainError("spoof target amplitude must be in (0, 1]");
  }
};

/// Where a target landed in the victim schedule.
struct Placement {
  std::size_t target = 0;  ///< index into the target list
  std::size_t cycle = 0;
  std::size_t slot = 0;
  std::size_t channel = 0;
  double firing_azimuth = 0.0;  // [deg]
  double peak_time = 0.0;       // absolute [s]
  double amplitude = 1.0;

  RayId ray() const { return {cycle, static_cast<std::uint32_t>(channel)}; }
};

struct Rejection {
  std::size_t target = 0;
  std::string reason;
};

struct BasebandDesign {
  PulseTrain baseband;
  std::vector<Placement> placements;  ///< in target order
  std::vector<Rejection> rejected;
};

namespace detail {
inline double circular_distance(double a, double b) {
  const double d = std::abs(wrap_degrees(a - b));
  return std::min(d, 360.0 - d);
}
}  // namespace detail

/**
 * Converts spoof targets into one victim-shaped pulse each, peaking at the
 * firing time of the (cycle, channel) whose azimuth is nearest the target
 * plus the target's round-trip time. Only the cycles of one revolution
 * starting at `frame_origin` are reachable.
 */
inline BasebandDesign points_to_baseband(std::span<const SpoofTarget> targets, const LidarConfig& cfg,
                                         double frame_origin) {
  cfg.validate();
  BasebandDesign out;
  out.baseband.shape = PulseShape{cfg.pulse_width};
  const std::size_t cycles = cfg.cycles_per_revolution();
  const double advance = cfg.cycle_azimuth_advance();
  std::set<RayId> used;

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& tg = targets[i];
    tg.validate(cfg);
    const std::size_t slot = cfg.slot_of_channel(tg.channel);
    const double slot_azimuth = firing_event(cfg, 0, slot).azimuth;
    const double guess = std::round(wrap_degrees(tg.azimuth - slot_azimuth) / advance);

    std::optional<std::size_t> best;
    double best_distance = 0.0;
    for (const double cand : {guess - 1.0, guess, guess + 1.0, 0.0, static_cast<double>(cycles - 1)}) {
      if (cand < 0.0 || cand >= static_cast<double>(cycles)) continue;
      const auto k = static_cast<std::size_t>(cand);
      const double d = detail::circular_distance(firing_event(cfg, k, slot).azimuth, tg.azimuth);
      if (!best || d < best_distance || (d == best_distance && k < *best)) {
        best = k;
        best_distance = d;
      }
    }
    if (!best || best_distance > 0.5 * advance) {
      out.rejected.push_back({i, "no firing of this channel within half a cycle's azimuth advance"});
      continue;
    }
    const FiringEvent ev = firing_event(cfg, *best, slot);
    const RayId ray{ev.cycle, static_cast<std::uint32_t>(ev.channel)};
    if (!used.insert(ray).second)
      throw ConflictError("spoof targets " + std::to_string(i) + " and an earlier target share ray (cycle " +
                          std::to_string(ev.cycle) + ", channel " + std::to_string(ev.channel) + ")");
    Placement p{i, ev.cycle, ev.slot, ev.channel, ev.azimuth,
                frame_origin + ev.emit_time + round_trip_time(tg.range), tg.pulse_amplitude()};
    out.placements.push_back(p);
    out.baseband.pulses.push_back({p.peak_time, p.amplitude});
  }
  out.baseband.sort();
  return out;
}

/// One target on every (cycle, channel) of a revolution at a fixed range.
/// `mask` keeps firings whose azimuth lies in [lo, hi) (wrapping allowed).
inline std::vector<SpoofTarget> all_slot_targets(const LidarConfig& cfg, double range,
                                                 std::optional<std::pair<double, double>> mask = std::nullopt,
                                                 std::optional<double> amplitude = std::nullopt) {
  cfg.validate();
  std::vector<SpoofTarget> out;
  const std::size_t cycles = cfg.cycles_per_revolution();
  out.reserve(cycles * cfg.num_channels);
  for (std::size_t k = 0; k < cycles; ++k) {
    for (std::size_t s = 0; s < cfg.num_channels; ++s) {
      const FiringEvent ev = firing_event(cfg, k, s);
      if (mask) {
        const double width = wrap_degrees(mask->second - mask->first);
        const bool full = mask->second - mask->first >= 360.0;
        if (!full && wrap_degrees(ev.azimuth - mask->first) >= width) continue;
      }
      out.push_back({ev.channel, ev.azimuth, range, amplitude});
    }
  }
  return out;
}

/// AM source emitting (depth + depth * b(t)) * sin(2 pi f t + phi0) with the
/// power chain of `transmitter`.
inline EmiSource modulate_am(Baseband baseband, double carrier_freq, double depth, const EmiSource& transmitter = {}) {
  if (!(depth > 0.0 && depth <= 1.0)) throw DomainError("modulate_am: depth must be in (0, 1]");
  const double bw = baseband_bandwidth(baseband);
  if (!(carrier_freq > 2.0 * bw))
    throw DomainError("modulate_am: carrier must exceed twice the baseband bandwidth");
  EmiSource out = transmitter;
  out.carrier_freq = carrier_freq;
  out.modulation = AmModulation{std::move(baseband), depth, depth};
  return out;
}

/// Emission delay after a detected firing edge of the target's cycle, folded
/// forward by whole cycles when the attacker latency exceeds it.
inline double synchronize(double detected_firing, const SpoofTarget& target, const LidarConfig& cfg,
                          double system_latency) {
  (void)detected_firing;  // the delay is relative to the edge
  target.validate(cfg);
  if (!(system_latency >= 0.0)) throw DomainError("synchronize: latency must be non-negative");
  if (system_latency >= cfg.revolution_period())
    throw InfeasibleError("synchronize: latency of a full revolution or more cannot be folded");
  const double raw = slot_offset(cfg, cfg.slot_of_channel(target.channel)) + round_trip_time(target.range) -
                     system_latency;
  if (raw >= 0.0) return raw;
  return raw + std::ceil(-raw / cfg.cycle_period) * cfg.cycle_period;
}

/// Whole cycles `synchronize` folded forward.
inline std::size_t synchronize_folds(const SpoofTarget& target, const LidarConfig& cfg, double system_latency) {
  const double raw = slot_offset(cfg, cfg.slot_of_channel(target.channel)) + round_trip_time(target.range) -
                     system_latency;
  return raw >= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(-raw / cfg.cycle_period));
}

inline constexpr double kDefaultSyncJitter = 20e-12;  // [s]

struct AttackPlan {
  double carrier_freq = 1040e6;  // [Hz]
  double depth = 0.5;
  EmiSource transmitter;
  std::vector<SpoofTarget> targets;
  BasebandDesign design;  ///< pulses relative to a frame starting at time 0
  double emission_delay = 0.0;        // [s] for the earliest pulse
  std::string sync_reference = "rising edge of the first firing (slot 0) of each victim cycle";
  double system_latency = 0.0;        // [s]
  double sync_jitter = kDefaultSyncJitter;  // [s] std-dev of the edge timestamp
  std::vector<double> delays;         ///< per placement
  std::vector<std::size_t> folds;     ///< per placement
};

inline AttackPlan plan_attack(std::vector<SpoofTarget> targets, const LidarConfig& cfg, const EmiSource& transmitter,
                              double carrier_freq, double depth, double system_latency = 0.0,
                              double sync_jitter = kDefaultSyncJitter) {
  if (!(sync_jitter >= 0.0)) throw DomainError("sync jitter must be non-negative");
  AttackPlan plan;
  plan.carrier_freq = carrier_freq;
  plan.depth = depth;
  plan.transmitter = transmitter;
  plan.targets = std::move(targets);
  plan.system_latency = system_latency;
  plan.sync_jitter = sync_jitter;
  plan.design = points_to_baseband(plan.targets, cfg, 0.0);
  // Rejects bad depth or carrier before any simulation.
  (void)modulate_am(plan.design.baseband.bipolar(), carrier_freq, depth, transmitter);
  double earliest = std::numeric_limits<double>::infinity();
  for (const auto& p : plan.design.placements) {
    const auto& tg = plan.targets[p.target];
    plan.delays.push_back(synchronize(cycle_start(cfg, p.cycle), tg, cfg, system_latency));
    plan.folds.push_back(synchronize_folds(tg, cfg, system_latency));
    if (p.peak_time < earliest) {
      earliest = p.peak_time;
      plan.emission_delay = plan.delays.back();
    }
  }
  return plan;
}

enum class SyncMode { kSynchronized, kUnsynchronized };

/**
 * Transmitter output for one victim frame starting at `frame_origin`.
 *
 * Synchronized: every pulse is fired `delay` after the attacker's timestamp
 * of its reference edge, which carries Gaussian jitter drawn per reference
 * cycle. Unsynchronized: the same pattern is replayed with a random offset in
 * [0, revolution) and wrapped into the frame.
 */
inline EmiSource realize_attack(const AttackPlan& plan, const LidarConfig& cfg, double frame_origin,
                                std::size_t frame_index, SyncMode mode, std::uint64_t seed) {
  PulseTrain train;
  train.shape = plan.design.baseband.shape;
  train.pulses.reserve(plan.design.placements.size());
  const double rev = cfg.revolution_period();
  if (mode == SyncMode::kSynchronized) {
    std::map<long long, double> jitter;
    for (std::size_t i = 0; i < plan.design.placements.size(); ++i) {
      const auto& p = plan.design.placements[i];
      const long long ref = static_cast<long long>(p.cycle) - static_cast<long long>(plan.folds[i]);
      auto it = jitter.find(ref);
      if (it == jitter.end()) {
        double j = 0.0;
        if (plan.sync_jitter > 0.0) {
          SplitMix64 rng(derive_seed(seed, {0x73796e63, frame_index, static_cast<std::uint64_t>(ref)}));
          j = std::normal_distribution<double>(0.0, plan.sync_jitter)(rng);
        }
        it = jitter.emplace(ref, j).first;
      }
      const double detected = frame_origin + static_cast<double>(ref) * cfg.cycle_period + it->second;
      train.pulses.push_back({detected + plan.delays[i] + plan.system_latency, p.amplitude});
    }
  } else {
    SplitMix64 rng(derive_seed(seed, {0x756e73, frame_index}));
    const double offset = rng.uniform() * rev;
    for (const auto& p : plan.design.placements)
      train.pulses.push_back({frame_origin + std::fmod(p.peak_time + offset, rev), p.amplitude});
  }
  train.sort();
  return modulate_am(train.bipolar(), plan.carrier_freq, plan.depth, plan.transmitter);
}

/// Ray-by-ray outcome of an injection attempt.
struct TargetOutcome {
  std::size_t target = 0;
  RayId ray;
  bool hit = false;
  std::optional<double> achieved_range;  // [m]
};

/// A target is hit when its intended ray reports a valid point within `tolerance` of the target range.
inline std::vector<TargetOutcome> evaluate_injection(const AttackPlan& plan, const PointCloud& attacked,
                                                     double tolerance) {
  std::map<RayId, const Point*> by_ray;
  for (const auto& p : attacked.points)
    if (p.valid) by_ray.emplace(p.ray, &p);
  std::vector<TargetOutcome> out;
  for (const auto& pl : plan.design.placements) {
    TargetOutcome o{pl.target, pl.ray(), false, std::nullopt};
    if (const auto it = by_ray.find(o.ray); it != by_ray.end()) {
      o.achieved_range = it->second->r;
      o.hit = std::abs(it->second->r - plan.targets[pl.target].range) <= tolerance;
    }
    out.push_back(o);
  }
  return out;
}

/// Mean squared distance from each injected point (ray absent from
/// `benign`) to the nearest intended spoof position, pooled over frames.
inline double injection_positional_variance(const AttackPlan& plan, const LidarConfig& cfg,
                                            std::span<const PointCloud> attacked_frames, const PointCloud& benign) {
  std::vector<Vec3> intended;
  for (const auto& pl : plan.design.placements) {
    const auto& tg = plan.targets[pl.target];
    intended.push_back(beam_direction(cfg.vertical_angles[pl.channel], pl.firing_azimuth) * tg.range);
  }
  if (intended.empty()) throw UndefinedDistanceError("plan has no placed targets");
  std::set<RayId> benign_rays;
  for (const auto& p : benign.points)
    if (p.valid) benign_rays.insert(p.ray);
  const KdTree tree(intended);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& frame : attacked_frames) {
    for (const auto& p : frame.points) {
      if (!p.valid || benign_rays.contains(p.ray)) continue;
      sum += tree.nearest_squared(p.cartesian());
      ++n;
    }
  }
  if (n == 0) throw UndefinedDistanceError("no injected points in any frame");
  return sum / static_cast<double>(n);
}

struct CarrierSearchOptions {
  EmiSource transmitter;  ///< power chain; carrier and modulation are replaced
  double spoof_range = 5.0;  // [m]
  double depth = 0.5;
  double duration = 0.0;  ///< simulated frame length; zero means one revolution
  std::uint64_t seed = 1;
  HealthConfig health;
};

struct CarrierSearchResult {
  double best_freq = 0.0;
  std::vector<std::pair<double, std::size_t>> curve;
};

/// Inclusive frequency grid lo, lo + step, ..., up to hi.
inline std::vector<double> frequency_grid(double lo, double hi, double step) {
  if (!(lo > 0.0) || !(step > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw DomainError("frequency band must satisfy 0 < lo <= hi with step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step * (1.0 + 1e-12) + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * step;
  return out;
}

/**
 * Simulates one frame per carrier frequency with an all-slot injection
 * pattern and counts rays the attack adds to the benign frame. Ties resolve
 * to the lowest frequency.
 */
inline CarrierSearchResult carrier_search(const CouplingChannel& channel, std::pair<double, double> band, double step,
                                          const LidarConfig& victim, const Scene& scene,
                                          const CarrierSearchOptions& opt = {}) {
  const auto grid = frequency_grid(band.first, band.second, step);
  const auto scan_opt = scan_options(victim, opt.health, opt.duration);
  const FddMachine machine = fresh_machine(victim, opt.health.machine);
  const auto benign = scan_frame(scene, victim, nullptr, channel, machine, opt.seed, scan_opt);

  auto targets = all_slot_targets(victim, opt.spoof_range);
  AttackPlan plan = plan_attack(std::move(targets), victim, opt.transmitter, grid.front(), opt.depth, 0.0, 0.0);

  CarrierSearchResult out;
  out.curve.reserve(grid.size());
  std::size_t best_count = 0;
  out.best_freq = grid.front();
  for (const double f : grid) {
    plan.carrier_freq = f;
    const EmiSource emi = realize_attack(plan, victim, 0.0, 0, SyncMode::kSynchronized, opt.seed);
    const auto attacked = scan_frame(scene, victim, &emi, channel, machine, opt.seed, scan_opt);
    const std::size_t count = ray_error_stats(benign.cloud, attacked.cloud).injected_count;
    out.curve.emplace_back(f, count);
    if (count > best_count) {
      best_count = count;
      out.best_freq = f;
    }
  }
  return out;
}

// ---- JSON / CSV interchange ------------------------------------------------

inline std::vector<SpoofTarget> targets_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ConfigError("spoof target document must be a JSON array");
  std::vector<SpoofTarget> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    try {
      SpoofTarget t;
      t.channel = e.at("channel").get<std::size_t>();
      t.azimuth = e.at("azimuth_deg").get<double>();
      t.range = e.at("range_m").get<double>();
      if (e.contains("amplitude") && !e.at("amplitude").is_null()) t.amplitude = e.at("amplitude").get<double>();
      out.push_back(t);
    } catch (const nlohmann::json::exception& err) {
      throw ConfigError("spoof target " + std::to_string(i) + ": " + err.what());
    }
  }
  return out;
}

inline std::vector<SpoofTarget> load_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError(path + ": " + err.what());
  }
  return targets_from_json(doc);
}

inline nlohmann::json to_json(const SpoofTarget& t) {
  nlohmann::json j{{"channel", t.channel}, {"azimuth_deg", t.azimuth}, {"range_m", t.range}};
  if (t.amplitude) j["amplitude"] = *t.amplitude;
  return j;
}

inline nlohmann::json to_json(const AttackPlan& plan) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : plan.targets) targets.push_back(to_json(t));
  nlohmann::json placements = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.design.placements.size(); ++i) {
    const auto& p = plan.design.placements[i];
    placements.push_back({{"target", p.target},
                          {"cycle", p.cycle},
                          {"channel", p.channel},
                          {"firing_azimuth_deg", p.firing_azimuth},
                          {"peak_time_s", p.peak_time},
                          {"emission_delay_s", plan.delays[i]},
                          {"folded_cycles", plan.folds[i]}});
  }
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& r : plan.design.rejected) rejected.push_back({{"target", r.target}, {"reason", r.reason}});
  return {{"carrier_freq_hz", plan.carrier_freq},
          {"depth", plan.depth},
          {"emission_delay_s", plan.emission_delay},
          {"sync_reference", plan.sync_reference},
          {"system_latency_s", plan.system_latency},
          {"sync_jitter_s", plan.sync_jitter},
          {"targets", targets},
          {"placements", placements},
          {"rejected", rejected}};
}

/// Header: peak_time_s,amplitude
inline void write_baseband_csv(std::ostream& out, const PulseTrain& train) {
  out << "peak_time_s,amplitude\n";
  char buf[80];
  for (const auto& p : train.pulses) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.peak_time, p.amplitude);
    out << buf;
  }
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_ATTACK_HPP
