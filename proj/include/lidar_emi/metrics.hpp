#ifndef LIDAR_EMI_METRICS_HPP
#define LIDAR_EMI_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "lidar_emi/error.hpp"
#include "lidar_emi/fdd.hpp"
#include "lidar_emi/kdtree.hpp"
#include "lidar_emi/point_cloud.hpp"

namespace lidar_emi {

/// sup over `from` of the distance to the nearest point of `to`.
inline double directed_hausdorff(std::span<const Vec3> from, std::span<const Vec3> to) {
  if (from.empty() || to.empty()) throw UndefinedDistanceError("Hausdorff distance of an empty point set");
  const KdTree tree(to);
  double worst = 0.0;
  for (const auto& p : from) {
    // A point whose nearest neighbour is closer than the running maximum
    // cannot raise it, so its search may stop early.
    const double d = tree.nearest_squared(p, worst);
    if (d > worst) worst = d;
  }
  return std::sqrt(worst);
}

/// Exact symmetric Hausdorff distance between two finite point sets.
inline double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

/// Hausdorff distance between the valid points of two clouds, in Cartesian space.
inline double hausdorff(const PointCloud& a, const PointCloud& b) {
  const auto pa = a.valid_cartesian();
  const auto pb = b.valid_cartesian();
  return hausdorff(std::span<const Vec3>(pa), std::span<const Vec3>(pb));
}

struct RayErrorStats {
  double mean_abs_error = 0.0;  // [m] mean Euclidean displacement over matched rays
  double max_abs_error = 0.0;   // [m]
  std::size_t matched_rays = 0;
  double dropped_fraction = 0.0;
  std::size_t injected_count = 0;
  std::size_t benign_rays = 0;
};

namespace detail {
inline std::map<RayId, const Point*> index_valid(const PointCloud& pc, const char* which) {
  std::map<RayId, const Point*> out;
  for (const auto& p : pc.points) {
    if (!p.valid) continue;
    if (!out.emplace(p.ray, &p).second)
      throw ComparisonError(std::string(which) + " cloud has more than one point on a ray");
  }
  return out;
}
}  // namespace detail

/// Compares two frames ray by ray; only valid points take part.
inline RayErrorStats ray_error_stats(const PointCloud& benign, const PointCloud& attacked) {
  if (benign.config_id != attacked.config_id)
    throw ComparisonError("clouds come from different configurations ('" + benign.config_id + "' vs '" +
                          attacked.config_id + "')");
  const auto b = detail::index_valid(benign, "benign");
  const auto a = detail::index_valid(attacked, "attacked");
  RayErrorStats s;
  s.benign_rays = b.size();
  double sum = 0.0;
  std::size_t dropped = 0;
  for (const auto& [ray, pb] : b) {
    const auto it = a.find(ray);
    if (it == a.end()) {
      ++dropped;
      continue;
    }
    const double e = (pb->cartesian() - it->second->cartesian()).norm();
    sum += e;
    s.max_abs_error = std::max(s.max_abs_error, e);
    ++s.matched_rays;
  }
  for (const auto& [ray, pa] : a) s.injected_count += b.contains(ray) ? 0 : 1;
  s.mean_abs_error = s.matched_rays > 0 ? sum / static_cast<double>(s.matched_rays) : 0.0;
  s.dropped_fraction = b.empty() ? 0.0 : static_cast<double>(dropped) / static_cast<double>(b.size());
  return s;
}

enum class EffectLabel { kNone, kPointsInterference, kPointsRemoval, kPowerOff };

inline std::string_view to_string(EffectLabel l) {
  switch (l) {
    case EffectLabel::kNone: return "None";
    case EffectLabel::kPointsInterference: return "PointsInterference";
    case EffectLabel::kPointsRemoval: return "PointsRemoval";
    case EffectLabel::kPowerOff: return "PowerOff";
  }
  return "?";
}

struct EffectThresholds {
  double unaffected = 0.02;     // [m] mean error at or below: unaffected
  double removal = 1.0;         // [m] mean error at or above: removal
  double removal_dropped = 0.5; // dropped fraction at or above: removal
};

inline EffectLabel classify_effect(const RayErrorStats& s, LidarState final_state, const EffectThresholds& th = {}) {
  if (final_state == LidarState::kPowerOff) return EffectLabel::kPowerOff;
  if (s.mean_abs_error >= th.removal || s.dropped_fraction >= th.removal_dropped) return EffectLabel::kPointsRemoval;
  if (s.mean_abs_error > th.unaffected) return EffectLabel::kPointsInterference;
  return EffectLabel::kNone;
}

/// Rb = AP' / AP_benign.
inline double robustness(double ap_attacked, double ap_benign) {
  if (ap_benign == 0.0) throw DomainError("robustness: benign AP is zero");
  if (ap_benign < 0.0 || ap_benign > 100.0 || ap_attacked < 0.0 || ap_attacked > 100.0)
    throw DomainError("robustness: AP values must lie in [0, 100]");
  return ap_attacked / ap_benign;
}

struct SweepSample {
  double frequency = 0.0;
  PointCloud cloud;
  LidarState state = LidarState::kNormal;
};

struct SweepRow {
  double frequency = 0.0;
  std::optional<double> hausdorff;  ///< nullopt: attacked frame has no valid point
  EffectLabel label = EffectLabel::kNone;
  std::size_t injected_count = 0;
};

inline std::vector<SweepRow> sweep_report(std::span<const SweepSample> results, const PointCloud& benign) {
  std::vector<SweepRow> rows;
  rows.reserve(results.size());
  const bool benign_empty = benign.valid_count() == 0;
  for (const auto& r : results) {
    SweepRow row;
    row.frequency = r.frequency;
    const auto stats = ray_error_stats(benign, r.cloud);
    row.label = classify_effect(stats, r.state);
    row.injected_count = stats.injected_count;
    if (!benign_empty && r.cloud.valid_count() > 0) row.hausdorff = hausdorff(benign, r.cloud);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  return rows;
}

inline constexpr std::string_view kRemovedAllSentinel = "removed-all";

/// Header: freq_hz,hausdorff_m,effect_label,injected_count
inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "freq_hz,hausdorff_m,effect_label,injected_count\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.frequency);
    out << buf << ',';
    if (r.hausdorff) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.hausdorff);
      out << buf;
    } else {
      out << kRemovedAllSentinel;
    }
    out << ',' << to_string(r.label) << ',' << r.injected_count << '\n';
  }
}

/// Header: mean_abs_error_m,max_abs_error_m,matched_rays,dropped_fraction,injected_count
inline void write_stats_csv_header(std::ostream& out) {
  out << "mean_abs_error_m,max_abs_error_m,matched_rays,dropped_fraction,injected_count";
}

inline void write_stats_csv_row(std::ostream& out, const RayErrorStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g,%zu", s.mean_abs_error, s.max_abs_error, s.matched_rays,
                s.dropped_fraction, s.injected_count);
  out << buf;
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_METRICS_HPP
