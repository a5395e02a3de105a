#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "test_support.hpp"

using namespace lidar_emi;
using namespace lidar_emi::testing;

namespace {

std::size_t argmax(const Waveform& w) {
  return static_cast<std::size_t>(std::max_element(w.samples.begin(), w.samples.end()) - w.samples.begin());
}

EmiSource cw(double f, double phase = 0.0) {
  EmiSource e;
  e.carrier_freq = f;
  e.initial_phase = phase;
  return e;
}

// Peak-bin frequency of a real sequence by direct DFT.
double dft_peak_frequency(const std::vector<double>& x, double rate, bool skip_dc = false) {
  const std::size_t n = x.size();
  double best = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = skip_dc ? 1 : 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * i) % n) / static_cast<double>(n));
    if (std::abs(acc) > best + 1e-9) {
      best = std::abs(acc);
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * rate / static_cast<double>(n);
}

}  // namespace

TEST(RangeFromTof, SpotValues) {
  EXPECT_EQ(range_from_tof(0.0, 0.0), 0.0);
  EXPECT_NEAR(range_from_tof(0.0, 1e-6), 149.896229, 149.896229 * 1e-6);
  EXPECT_NEAR(range_from_tof(0.0, 66.713e-9), 10.0, 10.0 * 1e-4);
  EXPECT_NEAR(range_from_tof(5e-6, 5e-6 + 2.0 * 10.0 / 299792458.0), 10.0, 1e-9);
  EXPECT_THROW(range_from_tof(1e-6, 0.5e-6), OrderingError);
}

TEST(RangeFromTofProperty, Linearity) {
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double tau0 = rng.uniform() * 0.1;
    const double delta = 1e-9 + rng.uniform() * 1e-6;
    const double k = 0.1 + 9.9 * rng.uniform();
    const double lhs = range_from_tof(tau0, tau0 + k * delta);
    const double rhs = k * range_from_tof(tau0, tau0 + delta);
    EXPECT_NEAR(lhs, rhs, 1e-9 * rhs + 1e-9);
  }
}

TEST(SynthesizeEcho, PeakAtRoundTrip) {
  const LidarConfig cfg;
  const Waveform w = synthesize_echo(10.0, 0.8, 0.0, cfg);
  EXPECT_EQ(w.sample_rate, cfg.sim_sample_rate);
  EXPECT_EQ(w.size(), 46080u);
  const double truth = 2.0 * 10.0 / 299792458.0;
  EXPECT_NEAR(truth, 66.713e-9, 1e-12);
  EXPECT_NEAR(w.time_at(argmax(w)), truth, 0.5 / cfg.sim_sample_rate);
  EXPECT_NEAR(w.samples[argmax(w)], 0.8 / 100.0, 1e-6);
}

TEST(SynthesizeEcho, OutOfRangeGivesEmptyWindow) {
  const LidarConfig cfg;
  for (const double r : {0.0, -1.0, 100.0001}) {
    const Waveform w = synthesize_echo(r, 0.8, 1e-3, cfg);
    EXPECT_EQ(w.size(), 46080u);
    EXPECT_TRUE(std::all_of(w.samples.begin(), w.samples.end(), [](double v) { return v == 0.0; }));
  }
  const Waveform edge = synthesize_echo(100.0, 1.0, 0.0, cfg);
  EXPECT_NEAR(edge.time_at(argmax(edge)), 2.0 * 100.0 / 299792458.0, 0.5 / cfg.sim_sample_rate);
}

TEST(CoupleEmi, ZeroGainIsIdentity) {
  const LidarConfig cfg;
  const Waveform echo = synthesize_echo(10.0, 0.8, 0.0, cfg);
  CouplingChannel ch;
  ch.surfaces[Surface::kReceiverTrace];
  const Waveform out = couple_emi(echo, cw(990e6), ch);
  EXPECT_EQ(out.samples, echo.samples);
}

TEST(CoupleEmi, PureCwIsScaledSinusoid) {
  const LidarConfig cfg;
  const EmiSource emi = cw(990e6, 0.3);
  const CouplingChannel ch = receiver_channel_for(0.25, emi);
  const Waveform out = couple_emi(synthesize_echo(0.0, 1.0, 0.0, cfg), emi, ch);
  const Waveform tone = sampled_tone(990e6, 0.3, cfg.sim_sample_rate, out.size());
  for (std::size_t i = 0; i < out.size(); ++i) ASSERT_NEAR(out.samples[i], 0.25 * tone.samples[i], 1e-12);
}

TEST(CoupleEmi, SmallCwShiftsPeakByLessThanPulseWidth) {
  const LidarConfig cfg;
  const Waveform echo = synthesize_echo(10.0, 0.8, 0.0, cfg);
  const double peak = echo.samples[argmax(echo)];
  for (const double phase : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}) {
    const EmiSource emi = cw(990e6, phase);
    const Waveform out = couple_emi(echo, emi, receiver_channel_for(0.1 * peak, emi));
    EXPECT_LE(std::abs(out.time_at(argmax(out)) - echo.time_at(argmax(echo))), cfg.pulse_width);
  }
}

TEST(Saturate, Examples) {
  Waveform w = Waveform::zeros(1e9, 0.0, 5);
  w.samples = {0.1, -0.2, 0.5, -0.5, 0.0};
  EXPECT_EQ(saturate(w, 0.5).samples, w.samples);
  Waveform c = Waveform::zeros(1e9, 0.0, 4);
  std::fill(c.samples.begin(), c.samples.end(), 2.0);
  for (const double v : saturate(c, 1.0).samples) EXPECT_EQ(v, 1.0);
  EXPECT_THROW(saturate(w, 0.0), DomainError);
}

TEST(SaturateProperty, IdempotentAndBounded) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Waveform w = Waveform::zeros(1e9, 0.0, 64);
    for (auto& s : w.samples) s = 6.0 * rng.uniform() - 3.0;
    const double limit = 0.1 + 2.0 * rng.uniform();
    const Waveform once = saturate(w, limit);
    EXPECT_EQ(saturate(once, limit).samples, once.samples);
    for (const double s : once.samples) EXPECT_LE(std::abs(s), limit);
  }
}

TEST(Saturate, EchoOnSaturatingCwIsUndetectable) {
  const LidarConfig cfg;
  for (const double phase : {0.0, 0.7, 1.9, 4.0}) {
    const EmiSource emi = cw(900e6, phase);
    const Waveform echo = synthesize_echo(10.0, 0.8, 0.0, cfg);
    const Waveform w = digitize(saturate(couple_emi(echo, emi, receiver_channel_for(1.1, emi)), 1.0), 500e6);
    EXPECT_FALSE(detect_peak(w, cfg.detection_threshold, cfg.pulse_width));
  }
}

TEST(Digitize, IdentityAtSameRate) {
  const Waveform w = sampled_tone(10e6, 0.2, 500e6, 100);
  EXPECT_EQ(digitize(w, 500e6).samples, w.samples);
  EXPECT_THROW(digitize(w, 1e9), DomainError);
}

TEST(Digitize, CarrierFoldsOntoAliasTone) {
  // 990 MHz and 1040 MHz lie above and below 2 fs, so the alias is
  // phase-reversed for one of them: sin(2 pi (k fs - fa) t + p) = sin(2 pi fa t + pi - p).
  const std::size_t n = 20000;
  const double phase = 0.4;
  const Waveform a = digitize(sampled_tone(990e6, phase, 20e9, n), 500e6);
  const Waveform b = sampled_tone(10e6, std::numbers::pi - phase, 500e6, a.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.samples[i], b.samples[i], 1e-6);

  const Waveform c = digitize(sampled_tone(1040e6, phase, 20e9, n), 500e6);
  const Waveform d = sampled_tone(40e6, phase, 500e6, c.size());
  for (std::size_t i = 0; i < c.size(); ++i) ASSERT_NEAR(c.samples[i], d.samples[i], 1e-6);
}

TEST(AliasFrequency, SpotValues) {
  EXPECT_EQ(alias_frequency(250e6, 500e6), 250e6);
  EXPECT_EQ(alias_frequency(990e6, 500e6), 10e6);
  EXPECT_EQ(alias_frequency(989e6, 500e6), 11e6);
  EXPECT_EQ(alias_frequency(1040e6, 500e6), 40e6);
  EXPECT_THROW(alias_frequency(-1.0, 500e6), DomainError);
  EXPECT_THROW(alias_frequency(1.0, 0.0), DomainError);
}

TEST(AliasFrequencyProperty, MatchesDftPeak) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    // Integer-MHz grid, N = fs / 1 MHz samples: every tone sits on a bin.
    const double fs = 1e6 * (40 + static_cast<int>(rng.uniform() * 160));
    const double f = 1e6 * static_cast<int>(rng.uniform() * 4000);
    const auto n = static_cast<std::size_t>(fs / 1e6);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double cycles = f * static_cast<double>(i) / fs;
      x[i] = std::cos(2.0 * std::numbers::pi * (cycles - std::floor(cycles)));
    }
    EXPECT_DOUBLE_EQ(alias_frequency(f, fs), dft_peak_frequency(x, fs)) << "f=" << f << " fs=" << fs;
  }
}

TEST(DetectPeak, ZeroWaveform) { EXPECT_FALSE(detect_peak(Waveform::zeros(500e6, 0.0, 100), 1e-3)); }

TEST(DetectPeak, SymmetricTriangle) {
  Waveform w = Waveform::zeros(500e6, 1e-6, 21);
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] = std::max(0.0, 1.0 - std::abs(double(i) - 7.0) / 4.0);
  const auto d = detect_peak(w, 0.5);
  ASSERT_TRUE(d);
  EXPECT_DOUBLE_EQ(d->tau1, 1e-6 + 7.0 / 500e6);
  EXPECT_DOUBLE_EQ(d->peak_amplitude, 1.0);
}

TEST(DetectPeak, CleanPulseTimingWithinTwoCentimetres) {
  const LidarConfig cfg;
  const Waveform w = digitize(synthesize_echo(10.0, 0.8, 0.0, cfg), cfg.adc_sample_rate);
  const auto d = detect_peak(w, cfg.detection_threshold);
  ASSERT_TRUE(d);
  EXPECT_NEAR(d->tau1, 66.713e-9, 0.13e-9);
  EXPECT_NEAR(range_from_tof(0.0, d->tau1), 10.0, 0.02);
}

TEST(DetectPeak, LonePulseWithoutSupportIsRejected) {
  Waveform w = Waveform::zeros(500e6, 0.0, 50);
  w.samples[20] = 1.0;
  EXPECT_FALSE(detect_peak(w, 0.1));
}

TEST(DetectPeak, ClipPlateaus) {
  Waveform w = Waveform::zeros(500e6, 0.0, 50);
  for (std::size_t i = 18; i <= 22; ++i) w.samples[i] = 0.6;
  w.samples[19] = w.samples[20] = w.samples[21] = 1.0;
  w.clip_level = 1.0;
  const auto short_plateau = detect_peak(w, 0.1, 10e-9);
  ASSERT_TRUE(short_plateau);
  EXPECT_DOUBLE_EQ(short_plateau->tau1, 20.0 / 500e6);
  for (std::size_t i = 10; i <= 30; ++i) w.samples[i] = 1.0;
  EXPECT_FALSE(detect_peak(w, 0.1, 10e-9));
  EXPECT_THROW(detect_peak(Waveform{}, 0.1), DomainError);
}

// Random ranges through the dense chain land within the ranging accuracy.
TEST(SignalChainProperty, CleanRoundTrip) {
  const LidarConfig cfg;
  SplitMix64 rng(12);
  for (int i = 0; i < 300; ++i) {
    const double r = 0.5 + 99.5 * rng.uniform();
    const double refl = 0.05 + 0.95 * rng.uniform();
    const double t0 = rng.uniform() * 1e-3;
    const Waveform w = digitize(synthesize_echo(r, refl, t0, cfg), cfg.adc_sample_rate);
    const auto d = detect_peak(w, cfg.detection_threshold);
    ASSERT_TRUE(d) << r;
    EXPECT_LE(std::abs(range_from_tof(t0, d->tau1) - r), cfg.range_accuracy) << r;
  }
}

// The scan driver's ADC-rate receiver reproduces the dense chain when noise is off.
TEST(SignalChainProperty, FastReceiverMatchesDenseChain) {
  const LidarConfig cfg = noiseless();
  SplitMix64 rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    const double r = 1.0 + 98.0 * rng.uniform();
    const double refl = 0.1 + 0.9 * rng.uniform();
    const double t0 = 1e-4 * std::floor(rng.uniform() * 1000.0) * 0.5;
    const EmiSource emi = cw(500e6 + 2500e6 * rng.uniform(), 6.0 * rng.uniform());
    const double amplitude = std::pow(10.0, -6.0 + 6.5 * rng.uniform());
    const CouplingChannel ch = receiver_channel_for(amplitude, emi);

    const Waveform dense =
        digitize(saturate(couple_emi(synthesize_echo(r, refl, t0, cfg), emi, ch, t0), cfg.receiver_saturation),
                 cfg.adc_sample_rate);
    const Receiver rx(cfg, &emi, ch);
    const Waveform fast = rx.acquire(t0, EchoReturn{t0 + round_trip_time(r), echo_intensity(r, refl)}, nullptr);
    ASSERT_LE(fast.size(), dense.size());
    for (std::size_t i = 0; i < fast.size(); ++i) ASSERT_NEAR(fast.samples[i], dense.samples[i], 1e-12) << i;

    Waveform dense_gate = dense;
    dense_gate.samples.resize(fast.size());
    const auto a = rx.detect(fast);
    const auto b = detect_peak(dense_gate, cfg.detection_threshold, cfg.pulse_width);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_NEAR(a->tau1, b->tau1, 1e-15);
    }
  }
}

// Per-channel CW range error repeats with the per-cycle carrier phase advance:
// period 1 / frac(f * cycle_period) cycles, folded to the nearer side.
TEST(SignalChainProperty, InterferencePatternPeriod) {
  const LidarConfig cfg = noiseless();
  const std::size_t cycles = 200;
  for (const double f : {990e6, 989e6}) {
    const EmiSource emi = cw(f, 0.2);
    const CouplingChannel ch = receiver_channel_for(5e-4, emi);
    const auto r = scan_frame(enclosing_sphere(10.0), cfg, &emi, ch, fresh_machine(cfg), 1,
                              scan_options(cfg, {}, cycles * cfg.cycle_period));
    std::vector<double> err(cycles, 0.0);
    for (const auto& p : r.cloud.points)
      if (p.ray.channel == 5) err[p.ray.cycle] = p.r - 10.0;
    const double advance = f * cfg.cycle_period - std::floor(f * cfg.cycle_period);
    const double predicted = 1.0 / std::min(advance, 1.0 - advance);
    const double measured = 1.0 / dft_peak_frequency(err, 1.0, true);
    EXPECT_NEAR(measured, predicted, 1.0) << "f=" << f;
  }
}

TEST(Waveform, CsvExport) {
  Waveform w = Waveform::zeros(1e9, 0.0, 2);
  w.samples = {0.5, -0.25};
  std::ostringstream out;
  write_csv(out, w);
  EXPECT_EQ(out.str(), "time,amplitude\n0,0.5\n1.0000000000000001e-09,-0.25\n");
}
