#ifndef LIDAR_EMI_POINT_CLOUD_HPP
#define LIDAR_EMI_POINT_CLOUD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lidar_emi/geometry.hpp"

namespace lidar_emi {

/// (firing cycle, channel) key identifying one laser ray within a frame.
struct RayId {
  std::uint64_t cycle = 0;
  std::uint32_t channel = 0;
  constexpr auto operator<=>(const RayId&) const = default;
};

/**
 * Spherical measurement. `theta` is the polar angle from +z and `phi` the
 * azimuth counter-clockwise from +x, both in degrees.
 */
struct Point {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double intensity = 0.0;
  bool valid = true;
  RayId ray;
  /// Cartesian floats as read from a binary file. Kept so that an unmodified
  /// point is written back bit-exactly; cleared whenever `r` changes.
  std::optional<std::array<float, 3>> source_xyz;

  Vec3 cartesian() const {
    const double th = deg2rad(theta);
    const double ph = deg2rad(phi);
    return {r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th)};
  }

  static Point from_cartesian(const Vec3& p, double intensity, RayId ray) {
    Point out;
    out.r = p.norm();
    out.theta = out.r > 0.0 ? rad2deg(std::acos(std::clamp(p.z / out.r, -1.0, 1.0))) : 0.0;
    out.phi = wrap_degrees(rad2deg(std::atan2(p.y, p.x)));
    out.intensity = intensity;
    out.ray = ray;
    return out;
  }
};

struct PointCloud {
  std::vector<Point> points;
  std::size_t frame_index = 0;
  std::string config_id;

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (const auto& p : points) n += p.valid ? 1 : 0;
    return n;
  }

  std::vector<Vec3> valid_cartesian() const {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points)
      if (p.valid) out.push_back(p.cartesian());
    return out;
  }
};

}  // namespace lidar_emi

#endif  // LIDAR_EMI_POINT_CLOUD_HPP
