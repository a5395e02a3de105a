#ifndef LIDAR_EMI_WAVEFORM_HPP
#define LIDAR_EMI_WAVEFORM_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "lidar_emi/error.hpp"

namespace lidar_emi {

/// Uniformly sampled signal. `clip_level` is set once the signal has passed
/// through a saturating stage and is carried along by resampling.
struct Waveform {
  double sample_rate = 1.0;  // [Hz]
  double start_time = 0.0;   // [s]
  std::vector<double> samples;
  std::optional<double> clip_level;

  static Waveform zeros(double sample_rate, double start_time, std::size_t n) {
    return Waveform{sample_rate, start_time, std::vector<double>(n, 0.0), std::nullopt};
  }

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double period() const { return 1.0 / sample_rate; }
  double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / sample_rate; }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  /// Linear interpolation; zero outside the sampled span.
  double value_at(double t) const {
    if (samples.empty()) return 0.0;
    const double x = (t - start_time) * sample_rate;
    if (x < 0.0 || x > static_cast<double>(samples.size() - 1)) return 0.0;
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples.size()) return samples.back();
    const double f = x - static_cast<double>(i);
    return samples[i] + f * (samples[i + 1] - samples[i]);
  }

  /// Slope bandwidth max|w'| / (2 pi max|w|), a lower bound on the true
  /// bandwidth of a band-limited signal.
  double bandwidth_estimate() const {
    double peak = 0.0;
    double slope = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      peak = std::max(peak, std::abs(samples[i]));
      if (i > 0) slope = std::max(slope, std::abs(samples[i] - samples[i - 1]) * sample_rate);
    }
    return peak > 0.0 ? slope / (2.0 * std::numbers::pi * peak) : 0.0;
  }

  void validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw DomainError("waveform sample_rate must be positive");
    for (const double s : samples)
      if (!std::isfinite(s)) throw DomainError("waveform samples must be finite");
  }
};

/// `time,amplitude` CSV with a header row.
inline void write_csv(std::ostream& out, const Waveform& w) {
  out << "time,amplitude\n";
  char buf[80];
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", w.time_at(i), w.samples[i]);
    out << buf;
  }
}

/// Gaussian laser pulse parameterized by its full width at half maximum.
struct PulseShape {
  double fwhm = 10e-9;

  double sigma() const { return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }
  /// Half-width beyond which the pulse is treated as zero.
  double support() const { return 8.0 * sigma(); }
  double operator()(double dt) const {
    const double s = sigma();
    if (std::abs(dt) > 8.0 * s) return 0.0;
    const double u = dt / s;
    return std::exp(-0.5 * u * u);
  }
};

struct Pulse {
  double peak_time = 0.0;
  double amplitude = 1.0;
};

/**
 * Sparse baseband made of identical Gaussian pulses:
 *
 *   b(t) = offset + scale * sum_i amplitude_i * p(t - peak_time_i)
 *
 * A full-revolution spoof baseband holds tens of thousands of 10 ns pulses
 * over 0.1 s; storing it densely at the simulation rate is not practical.
 */
struct PulseTrain {
  PulseShape shape;
  std::vector<Pulse> pulses;  ///< sorted by peak_time
  double offset = 0.0;
  double scale = 1.0;

  void sort() {
    std::sort(pulses.begin(), pulses.end(), [](const Pulse& a, const Pulse& b) { return a.peak_time < b.peak_time; });
  }

  double value_at(double t) const {
    const double reach = shape.support();
    auto it = std::lower_bound(pulses.begin(), pulses.end(), t - reach,
                               [](const Pulse& p, double v) { return p.peak_time < v; });
    double sum = 0.0;
    for (; it != pulses.end() && it->peak_time <= t + reach; ++it) sum += it->amplitude * shape(t - it->peak_time);
    return offset + scale * sum;
  }

  Waveform render(double start, std::size_t n, double rate) const {
    Waveform w = Waveform::zeros(rate, start, n);
    for (std::size_t i = 0; i < n; ++i) w.samples[i] = value_at(w.time_at(i));
    return w;
  }

  /// Same keying with the idle level at -1 and pulse peaks at 2a - 1, so an
  /// AM envelope bias + depth * b(t) with bias == depth is silent between pulses.
  PulseTrain bipolar() const {
    PulseTrain out = *this;
    out.offset = -1.0;
    out.scale = 2.0;
    return out;
  }

  double bandwidth_estimate() const {
    if (pulses.empty() || scale == 0.0) return 0.0;
    // max|p'| = 1 / (sigma sqrt(e)) for a unit Gaussian.
    return 1.0 / (2.0 * std::numbers::pi * shape.sigma() * std::sqrt(std::numbers::e));
  }
};

using Baseband = std::variant<Waveform, PulseTrain>;

inline double baseband_value(const Baseband& b, double t) {
  return std::visit([t](const auto& x) { return x.value_at(t); }, b);
}

inline double baseband_bandwidth(const Baseband& b) {
  return std::visit([](const auto& x) { return x.bandwidth_estimate(); }, b);
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_WAVEFORM_HPP
