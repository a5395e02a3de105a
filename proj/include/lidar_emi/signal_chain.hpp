#ifndef LIDAR_EMI_SIGNAL_CHAIN_HPP
#define LIDAR_EMI_SIGNAL_CHAIN_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <random>

#include "lidar_emi/config.hpp"
#include "lidar_emi/emi.hpp"
#include "lidar_emi/error.hpp"
#include "lidar_emi/random.hpp"
#include "lidar_emi/waveform.hpp"

namespace lidar_emi {

struct EchoDetection {
  double tau1 = 0.0;            // [s]
  double peak_amplitude = 0.0;
};

/// Peak echo amplitude: reflectivity * (1 m / max(r, 1 m))^2, kept in (0, 1].
inline double echo_intensity(double range, double reflectivity) {
  const double r = std::max(range, 1.0);
  return std::clamp(reflectivity / (r * r), std::numeric_limits<double>::min(), 1.0);
}

inline double round_trip_time(double range) { return 2.0 * range / kSpeedOfLight; }

/// R = c (tau1 - tau0) / 2.
inline double range_from_tof(double tau0, double tau1) {
  if (tau1 < tau0) throw OrderingError("range_from_tof: receive time precedes emission time");
  return 0.5 * kSpeedOfLight * (tau1 - tau0);
}

inline std::size_t receive_window_samples(const LidarConfig& cfg, double rate) {
  return static_cast<std::size_t>(std::llround(cfg.firing_interval * rate));
}

/// Dense echo over one receive window starting at `emit_time`. Ranges
/// outside (0, max_range] give the all-zero window of a shot with no return.
inline Waveform synthesize_echo(double range, double reflectivity, double emit_time, const LidarConfig& cfg) {
  Waveform w = Waveform::zeros(cfg.sim_sample_rate, emit_time, receive_window_samples(cfg, cfg.sim_sample_rate));
  if (!(range > 0.0 && range <= cfg.max_range)) return w;
  const PulseShape shape{cfg.pulse_width};
  const double amplitude = echo_intensity(range, reflectivity);
  const double peak = emit_time + round_trip_time(range);
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] = amplitude * shape(w.time_at(i) - peak);
  return w;
}

/// Receiver-surface contribution of `emi` per unit coupled amplitude.
inline double receiver_pickup(const EmiSource& emi, double demodulation, double t) {
  return emi.envelope(t) * (emi.carrier(t) + demodulation);
}

/// echo + a * s(t), with sample i at absolute time window_start + i / rate.
inline Waveform couple_emi(const Waveform& echo, const EmiSource& emi, const CouplingChannel& channel,
                           double window_start) {
  const double a = coupled_amplitude(emi, channel, Surface::kReceiverTrace);
  const double demod = channel.surface(Surface::kReceiverTrace).demodulation;
  Waveform out = echo;
  if (a == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = window_start + static_cast<double>(i) / out.sample_rate;
    out.samples[i] += a * receiver_pickup(emi, demod, t);
  }
  return out;
}

inline Waveform couple_emi(const Waveform& echo, const EmiSource& emi, const CouplingChannel& channel) {
  return couple_emi(echo, emi, channel, echo.start_time);
}

/// Element-wise clip to [-limit, +limit].
inline Waveform saturate(const Waveform& w, double limit) {
  if (!(limit > 0.0)) throw DomainError("saturate: limit must be positive");
  Waveform out = w;
  for (auto& s : out.samples) s = std::clamp(s, -limit, limit);
  out.clip_level = out.clip_level ? std::min(*out.clip_level, limit) : limit;
  return out;
}

/// Point-samples `w` every 1 / adc_rate from its start; no anti-alias filter.
inline Waveform digitize(const Waveform& w, double adc_rate) {
  if (!(adc_rate > 0.0) || adc_rate > w.sample_rate) throw DomainError("digitize: adc_rate must be in (0, sample_rate]");
  if (adc_rate == w.sample_rate) return w;
  const double step = w.sample_rate / adc_rate;
  const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(w.size()) / step + 1e-9));
  Waveform out = Waveform::zeros(adc_rate, w.start_time, n);
  out.clip_level = w.clip_level;
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * step));
    out.samples[i] = w.samples[std::min(idx, w.size() - 1)];
  }
  return out;
}

/// Apparent frequency of a tone at f after sampling at fs, in [0, fs/2].
inline double alias_frequency(double f, double fs) {
  if (!(f >= 0.0) || !(fs > 0.0)) throw DomainError("alias_frequency: need f >= 0 and fs > 0");
  return std::abs(f - fs * std::round(f / fs));
}

/**
 * Global-maximum peak detector with 3-point parabolic refinement.
 *
 * Returns nothing when the maximum is below `threshold`, when it is not
 * supported by its neighbours (both must reach threshold / 2; a lone noise
 * spike is not a pulse), or when the waveform is pinned at its clip level
 * for longer than `min_plateau` in total (a saturated receiver cannot time
 * an echo).
 */
inline std::optional<EchoDetection> detect_peak(const Waveform& w, double threshold, double min_plateau = 10e-9) {
  if (w.empty()) throw DomainError("detect_peak: empty waveform");
  const auto& s = w.samples;
  const std::size_t n = s.size();
  const auto k = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  const double peak = s[k];
  if (peak < threshold) return std::nullopt;

  if (w.clip_level && peak >= *w.clip_level) {
    const double clip = *w.clip_level;
    std::size_t clipped = 0;
    for (const double v : s) clipped += v >= clip ? 1 : 0;
    if (static_cast<double>(clipped) / w.sample_rate > min_plateau) return std::nullopt;
    std::size_t end = k;
    while (end + 1 < n && s[end + 1] >= clip) ++end;
    const double centre = 0.5 * static_cast<double>(k + end);
    return EchoDetection{w.start_time + centre / w.sample_rate, peak};
  }

  const double support = 0.5 * threshold;
  if ((k > 0 && s[k - 1] < support) || (k + 1 < n && s[k + 1] < support)) return std::nullopt;

  double offset = 0.0;
  double refined = peak;
  if (k > 0 && k + 1 < n) {
    const double a = s[k - 1];
    const double c = s[k + 1];
    const double denom = a - 2.0 * peak + c;
    if (denom < 0.0) {
      offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
      refined = peak - 0.25 * (a - c) * offset;
    }
  }
  return EchoDetection{w.start_time + (static_cast<double>(k) + offset) / w.sample_rate, std::max(refined, peak)};
}

/// Real echo arriving in a receive window.
struct EchoReturn {
  double peak_time = 0.0;  // absolute [s]
  double amplitude = 0.0;
};

/**
 * ADC-rate receive path used by the scan driver.
 *
 * Evaluates echo + coupled EMI + white noise directly at the ADC instants and
 * clips at the receiver saturation level. Without noise this equals
 * digitize(saturate(couple_emi(synthesize_echo(...)))) whenever the ADC rate
 * divides the simulation rate, because clipping is element-wise and the ADC
 * point-samples.
 */
class Receiver {
 public:
  Receiver(const LidarConfig& cfg, const EmiSource* emi, const CouplingChannel& channel)
      : cfg_(&cfg), emi_(emi), shape_{cfg.pulse_width} {
    if (emi_ != nullptr && channel.has(Surface::kReceiverTrace)) {
      coupled_ = lidar_emi::coupled_amplitude(*emi_, channel, Surface::kReceiverTrace);
      demodulation_ = channel.surface(Surface::kReceiverTrace).demodulation;
    }
    const auto full = receive_window_samples(cfg, cfg.adc_sample_rate);
    const double gate = round_trip_time(cfg.max_range) + 4.0 * cfg.pulse_width;
    const auto gated = static_cast<std::size_t>(std::ceil(gate * cfg.adc_sample_rate)) + 1;
    listen_samples_ = std::min(full, gated);
  }

  double coupled_amplitude() const { return coupled_; }
  std::size_t listen_samples() const { return listen_samples_; }

  /// Noise-free when `rng` is null or the configured noise floor is zero.
  Waveform acquire(double window_start, const std::optional<EchoReturn>& echo, SplitMix64* rng) const {
    Waveform w = Waveform::zeros(cfg_->adc_sample_rate, window_start, listen_samples_);
    const double sigma = cfg_->noise_floor();
    const double limit = cfg_->receiver_saturation;
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    const bool emi_active = emi_ != nullptr && coupled_ != 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double t = w.time_at(i);
      double v = 0.0;
      if (echo) v += echo->amplitude * shape_(t - echo->peak_time);
      if (emi_active) v += coupled_ * receiver_pickup(*emi_, demodulation_, t);
      if (rng != nullptr && sigma > 0.0) v += noise(*rng);
      w.samples[i] = std::clamp(v, -limit, limit);
    }
    w.clip_level = limit;
    return w;
  }

  std::optional<EchoDetection> detect(const Waveform& w) const {
    return detect_peak(w, cfg_->detection_threshold, cfg_->pulse_width);
  }

 private:
  const LidarConfig* cfg_;
  const EmiSource* emi_;
  PulseShape shape_;
  double coupled_ = 0.0;
  double demodulation_ = 0.0;
  std::size_t listen_samples_ = 0;
};

}  // namespace lidar_emi

#endif  // LIDAR_EMI_SIGNAL_CHAIN_HPP
