#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace lidar_emi;
using namespace lidar_emi::testing;

namespace {

std::vector<Vec3> random_points(SplitMix64& rng, std::size_t n, double extent = 50.0) {
  std::vector<Vec3> out(n);
  for (auto& p : out) p = {extent * (2 * rng.uniform() - 1), extent * (2 * rng.uniform() - 1), extent * rng.uniform()};
  return out;
}

double brute_directed(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, (p - q).squared_norm());
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

double brute_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return std::max(brute_directed(a, b), brute_directed(b, a));
}

PointCloud cloud_on_rays(SplitMix64& rng, std::size_t n) {
  PointCloud pc;
  pc.config_id = "test";
  for (std::size_t i = 0; i < n; ++i) {
    Point p;
    p.r = 1.0 + 80.0 * rng.uniform();
    p.theta = 75.0 + 30.0 * rng.uniform();
    p.phi = 360.0 * rng.uniform();
    p.intensity = rng.uniform();
    p.ray = {i / 16, static_cast<std::uint32_t>(i % 16)};
    pc.points.push_back(p);
  }
  return pc;
}

RayErrorStats stats_with(double mean, double dropped) {
  RayErrorStats s;
  s.mean_abs_error = mean;
  s.max_abs_error = mean;
  s.dropped_fraction = dropped;
  return s;
}

}  // namespace

TEST(Hausdorff, Examples) {
  const std::vector<Vec3> a{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> b{{0, 0, 0}};
  EXPECT_EQ(hausdorff(a, b), 1.0);
  EXPECT_EQ(hausdorff(std::vector<Vec3>{{0, 0, 0}}, std::vector<Vec3>{{3, 4, 0}}), 5.0);
  EXPECT_EQ(hausdorff(a, a), 0.0);
  EXPECT_EQ(directed_hausdorff(b, a), 0.0);
  EXPECT_EQ(directed_hausdorff(a, b), 1.0);
  EXPECT_THROW(hausdorff(a, std::vector<Vec3>{}), UndefinedDistanceError);
  EXPECT_THROW(hausdorff(std::vector<Vec3>{}, a), UndefinedDistanceError);
}

TEST(HausdorffProperty, MatchesBruteForceExactly) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_points(rng, 1 + static_cast<std::size_t>(rng.uniform() * 200));
    const auto b = random_points(rng, 1 + static_cast<std::size_t>(rng.uniform() * 200));
    ASSERT_EQ(hausdorff(a, b), brute_hausdorff(a, b));
    ASSERT_EQ(directed_hausdorff(a, b), brute_directed(a, b));
  }
}

TEST(HausdorffProperty, DuplicatesAndCoincidentPoints) {
  SplitMix64 rng(4);
  auto a = random_points(rng, 50, 2.0);
  auto b = a;
  b.insert(b.end(), a.begin(), a.begin() + 10);
  std::reverse(b.begin(), b.end());
  EXPECT_EQ(hausdorff(a, b), 0.0);
}

TEST(HausdorffProperty, MetricAxioms) {
  SplitMix64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_points(rng, 1 + static_cast<std::size_t>(rng.uniform() * 150));
    const auto b = random_points(rng, 1 + static_cast<std::size_t>(rng.uniform() * 150));
    const auto c = random_points(rng, 1 + static_cast<std::size_t>(rng.uniform() * 150));
    const double ab = hausdorff(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(hausdorff(a, a), 0.0);
    EXPECT_EQ(ab, hausdorff(b, a));
    EXPECT_LE(hausdorff(a, c), ab + hausdorff(b, c) + 1e-12);
  }
}

TEST(Hausdorff, CloudsUseValidPointsOnly) {
  SplitMix64 rng(8);
  auto a = cloud_on_rays(rng, 100);
  auto b = a;
  b.points[5].valid = false;
  b.points[5].r += 1000.0;
  EXPECT_LT(hausdorff(a, b), 1000.0);
  PointCloud empty;
  EXPECT_THROW(hausdorff(a, empty), UndefinedDistanceError);
}

TEST(RayErrorStats, Examples) {
  SplitMix64 rng(17);
  const auto benign = cloud_on_rays(rng, 1000);
  const auto same = ray_error_stats(benign, benign);
  EXPECT_EQ(same.mean_abs_error, 0.0);
  EXPECT_EQ(same.dropped_fraction, 0.0);
  EXPECT_EQ(same.injected_count, 0u);
  EXPECT_EQ(same.matched_rays, 1000u);
  EXPECT_EQ(same.benign_rays, 1000u);

  auto shifted = benign;
  for (auto& p : shifted.points) p.r += 0.05;
  const auto s = ray_error_stats(benign, shifted);
  EXPECT_NEAR(s.mean_abs_error, 0.05, 1e-12);
  EXPECT_NEAR(s.max_abs_error, 0.05, 1e-12);
  EXPECT_NEAR(hausdorff(benign, shifted), 0.05, 1e-9);

  auto partial = benign;
  partial.points.resize(400);
  EXPECT_DOUBLE_EQ(ray_error_stats(benign, partial).dropped_fraction, 0.6);

  auto invalidated = benign;
  for (std::size_t i = 0; i < 250; ++i) invalidated.points[i].valid = false;
  EXPECT_DOUBLE_EQ(ray_error_stats(benign, invalidated).dropped_fraction, 0.25);

  auto extra = benign;
  Point ghost = benign.points[0];
  ghost.ray = {999999, 3};
  extra.points.push_back(ghost);
  EXPECT_EQ(ray_error_stats(benign, extra).injected_count, 1u);
}

TEST(RayErrorStats, Errors) {
  SplitMix64 rng(1);
  const auto benign = cloud_on_rays(rng, 20);
  auto other = benign;
  other.config_id = "other";
  EXPECT_THROW(ray_error_stats(benign, other), ComparisonError);
  auto dup = benign;
  dup.points.push_back(dup.points[0]);
  EXPECT_THROW(ray_error_stats(benign, dup), ComparisonError);
}

TEST(RayErrorStatsProperty, RadialShiftBound) {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double eps = 0.2 * rng.uniform();
    const auto benign = cloud_on_rays(rng, 200);
    auto attacked = benign;
    for (auto& p : attacked.points) p.r += eps * (2.0 * rng.uniform() - 1.0);
    const auto s = ray_error_stats(benign, attacked);
    EXPECT_LE(s.mean_abs_error, eps + 1e-12);
    EXPECT_LE(s.max_abs_error, eps + 1e-12);
    EXPECT_LE(hausdorff(benign, attacked), eps + 1e-9);
  }
}

TEST(RayErrorStatsProperty, PermutationInvariant) {
  SplitMix64 rng(29);
  std::mt19937_64 shuffle_rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto benign = cloud_on_rays(rng, 300);
    auto attacked = benign;
    for (auto& p : attacked.points) p.r += 0.5 * rng.uniform();
    attacked.points.resize(200);
    const auto s = ray_error_stats(benign, attacked);
    std::shuffle(attacked.points.begin(), attacked.points.end(), shuffle_rng);
    const auto t = ray_error_stats(benign, attacked);
    EXPECT_EQ(s.mean_abs_error, t.mean_abs_error);
    EXPECT_EQ(s.max_abs_error, t.max_abs_error);
    EXPECT_EQ(s.dropped_fraction, t.dropped_fraction);
    EXPECT_EQ(classify_effect(s, LidarState::kNormal), classify_effect(t, LidarState::kNormal));
  }
}

TEST(ClassifyEffect, ExamplesAndBoundaries) {
  EXPECT_EQ(classify_effect(stats_with(0.01, 0.0), LidarState::kNormal), EffectLabel::kNone);
  EXPECT_EQ(classify_effect(stats_with(0.10, 0.0), LidarState::kNormal), EffectLabel::kPointsInterference);
  EXPECT_EQ(classify_effect(stats_with(0.02, 0.0), LidarState::kNormal), EffectLabel::kNone);
  EXPECT_EQ(classify_effect(stats_with(std::nextafter(0.02, 1.0), 0.0), LidarState::kNormal),
            EffectLabel::kPointsInterference);
  EXPECT_EQ(classify_effect(stats_with(1.0, 0.0), LidarState::kNormal), EffectLabel::kPointsRemoval);
  EXPECT_EQ(classify_effect(stats_with(0.0, 0.5), LidarState::kNormal), EffectLabel::kPointsRemoval);
  EXPECT_EQ(classify_effect(stats_with(0.0, std::nextafter(0.5, 0.0)), LidarState::kNormal), EffectLabel::kNone);
  EXPECT_EQ(classify_effect(stats_with(0.01, 1.0), LidarState::kWarning), EffectLabel::kPointsRemoval);
  EXPECT_EQ(to_string(EffectLabel::kPointsInterference), "PointsInterference");
}

TEST(ClassifyEffectProperty, PowerOffDominatesAndTotal) {
  SplitMix64 rng(31);
  for (int i = 0; i < 5000; ++i) {
    const auto s = stats_with(3.0 * rng.uniform(), rng.uniform());
    EXPECT_EQ(classify_effect(s, LidarState::kPowerOff), EffectLabel::kPowerOff);
    for (const auto st : {LidarState::kInitialization, LidarState::kNormal, LidarState::kWarning}) {
      const auto l = classify_effect(s, st);
      EXPECT_NE(l, EffectLabel::kPowerOff);
      EXPECT_EQ(l, classify_effect(s, st));
      const EffectLabel expected = (s.mean_abs_error >= 1.0 || s.dropped_fraction >= 0.5) ? EffectLabel::kPointsRemoval
                                   : s.mean_abs_error > 0.02 ? EffectLabel::kPointsInterference
                                                             : EffectLabel::kNone;
      EXPECT_EQ(l, expected);
    }
  }
}

TEST(Robustness, Values) {
  EXPECT_EQ(robustness(77.616, 77.616), 1.0);
  EXPECT_NEAR(robustness(72.585, 77.616), 0.9352, 5e-5);
  EXPECT_NEAR(robustness(85.651, 86.818), 0.9866, 5e-5);
  EXPECT_THROW(robustness(50.0, 0.0), DomainError);
  EXPECT_THROW(robustness(50.0, 101.0), DomainError);
  EXPECT_THROW(robustness(-1.0, 50.0), DomainError);
}

TEST(RobustnessProperty, ScaleInvariance) {
  SplitMix64 rng(37);
  for (int i = 0; i < 2000; ++i) {
    const double a = 1.0 + 49.0 * rng.uniform();
    const double b = 1.0 + 49.0 * rng.uniform();
    const double k = 0.01 + 1.99 * rng.uniform();
    EXPECT_NEAR(robustness(k * a, k * b), robustness(a, b), 4e-16 * robustness(a, b));
    EXPECT_EQ(robustness(0.5 * a, 0.5 * b), robustness(a, b));
  }
}

TEST(SweepReport, BenignEverywhere) {
  SplitMix64 rng(41);
  const auto benign = cloud_on_rays(rng, 100);
  std::vector<SweepSample> samples;
  for (const double f : {3e9, 1e9, 2e9}) samples.push_back({f, benign, LidarState::kNormal});
  const auto rows = sweep_report(samples, benign);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].frequency, (i + 1) * 1e9);
    EXPECT_EQ(rows[i].hausdorff, 0.0);
    EXPECT_EQ(rows[i].label, EffectLabel::kNone);
    EXPECT_EQ(rows[i].injected_count, 0u);
  }
}

TEST(SweepReport, EmptyAttackedUsesSentinel) {
  SplitMix64 rng(43);
  const auto benign = cloud_on_rays(rng, 100);
  PointCloud gone = benign;
  for (auto& p : gone.points) p.valid = false;
  const std::vector<SweepSample> samples{{900e6, gone, LidarState::kNormal}, {800e6, benign, LidarState::kNormal}};
  const auto rows = sweep_report(samples, benign);
  EXPECT_FALSE(rows[1].hausdorff.has_value());
  EXPECT_EQ(rows[1].label, EffectLabel::kPointsRemoval);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  EXPECT_EQ(csv.str(),
            "freq_hz,hausdorff_m,effect_label,injected_count\n"
            "800000000,0,None,0\n"
            "900000000,removed-all,PointsRemoval,0\n");
}

// End to end on the wall: saturating receiver carrier and encoder resonance.
TEST(SweepReport, SimulatedSaturationAndEncoder) {
  const LidarConfig cfg;
  const Scene scene = enclosing_sphere(10.0);
  const auto ch = load_channel(data_path("channels/victim.chan"));
  const EmiSource base = load_emi_source(data_path("emi/saturate.emi"));
  const auto opt = scan_options(cfg, {}, 0.005);
  const auto benign = scan_frame(scene, cfg, nullptr, ch, fresh_machine(cfg), 1, opt);
  std::vector<SweepSample> samples;
  for (const double f : {900e6, 1055e6, 3000e6}) {
    EmiSource e = base;
    e.carrier_freq = f;
    const auto r = scan_frame(scene, cfg, &e, ch, fresh_machine(cfg), 1, opt);
    samples.push_back({f, r.cloud, r.final_state()});
  }
  const auto rows = sweep_report(samples, benign.cloud);
  EXPECT_EQ(rows[0].label, EffectLabel::kPointsRemoval);
  EXPECT_FALSE(rows[0].hausdorff.has_value());
  EXPECT_EQ(rows[1].label, EffectLabel::kPowerOff);
  EXPECT_NE(rows[2].label, EffectLabel::kPowerOff);
}

TEST(StatsCsv, Format) {
  RayErrorStats s;
  s.mean_abs_error = 0.25;
  s.max_abs_error = 0.5;
  s.matched_rays = 3;
  s.dropped_fraction = 0.125;
  s.injected_count = 2;
  std::ostringstream out;
  write_stats_csv_header(out);
  out << '\n';
  write_stats_csv_row(out, s);
  EXPECT_EQ(out.str(), "mean_abs_error_m,max_abs_error_m,matched_rays,dropped_fraction,injected_count\n0.25,0.5,3,0.125,2");
}
