#ifndef LIDAR_EMI_GEOMETRY_HPP
#define LIDAR_EMI_GEOMETRY_HPP

#include <cmath>
#include <numbers>

namespace lidar_emi {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  constexpr bool operator==(const Vec3&) const = default;
};

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees into [0, 360).
inline double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

/// Unit beam direction. Elevation is measured from the horizontal plane,
/// azimuth counter-clockwise from +x.
inline Vec3 beam_direction(double elevation_deg, double azimuth_deg) {
  const double el = deg2rad(elevation_deg);
  const double az = deg2rad(azimuth_deg);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_GEOMETRY_HPP
