#ifndef LIDAR_EMI_SCENE_HPP
#define LIDAR_EMI_SCENE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lidar_emi/error.hpp"
#include "lidar_emi/geometry.hpp"
#include "lidar_emi/kv_config.hpp"

namespace lidar_emi {

struct Plane {
  Vec3 point;
  Vec3 normal;  // need not be unit length
  double reflectivity = 1.0;
};

struct Sphere {
  Vec3 center;
  double radius = 1.0;
  double reflectivity = 1.0;
};

struct Box {
  Vec3 min;
  Vec3 max;
  double reflectivity = 1.0;
};

using Primitive = std::variant<Plane, Sphere, Box>;

struct Hit {
  double range = 0.0;
  double reflectivity = 0.0;
};

inline double reflectivity_of(const Primitive& p) {
  return std::visit([](const auto& s) { return s.reflectivity; }, p);
}

struct Scene {
  std::vector<Primitive> primitives;

  void validate() const {
    for (const auto& p : primitives) {
      const double r = reflectivity_of(p);
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("primitive reflectivity must lie in (0, 1]");
      if (const auto* s = std::get_if<Sphere>(&p); s && !(s->radius > 0.0))
        throw ConfigError("sphere radius must be positive");
      if (const auto* pl = std::get_if<Plane>(&p); pl && pl->normal.squared_norm() == 0.0)
        throw ConfigError("plane normal must be non-zero");
      if (const auto* b = std::get_if<Box>(&p); b && !(b->min.x < b->max.x && b->min.y < b->max.y && b->min.z < b->max.z))
        throw ConfigError("box min corner must be below max corner on every axis");
    }
  }
};

namespace detail {

constexpr double kHitEpsilon = 1e-9;

inline std::optional<double> intersect(const Plane& p, const Vec3& o, const Vec3& d) {
  const double denom = p.normal.dot(d);
  if (denom == 0.0) return std::nullopt;
  const double t = p.normal.dot(p.point - o) / denom;
  if (t > kHitEpsilon) return t;
  return std::nullopt;
}

inline std::optional<double> intersect(const Sphere& s, const Vec3& o, const Vec3& d) {
  const Vec3 oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squared_norm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // Numerically stable pair of roots of t^2 + 2bt + c = 0.
  const double q = b > 0.0 ? -(b + root) : -(b - root);
  double t0 = q;
  double t1 = q != 0.0 ? c / q : -b;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > kHitEpsilon) return t0;
  if (t1 > kHitEpsilon) return t1;
  return std::nullopt;
}

inline std::optional<double> intersect(const Box& b, const Vec3& o, const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  const double lo[3] = {b.min.x, b.min.y, b.min.z};
  const double hi[3] = {b.max.x, b.max.y, b.max.z};
  const double oo[3] = {o.x, o.y, o.z};
  const double dd[3] = {d.x, d.y, d.z};
  for (int i = 0; i < 3; ++i) {
    if (dd[i] == 0.0) {
      if (oo[i] < lo[i] || oo[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t1 = (lo[i] - oo[i]) / dd[i];
    double t2 = (hi[i] - oo[i]) / dd[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > kHitEpsilon) return t_near;
  if (t_far > kHitEpsilon) return t_far;  // origin inside the box
  return std::nullopt;
}

}  // namespace detail

/// Nearest positive-distance hit no farther than `max_range`.
inline std::optional<Hit> cast_ray(const Scene& scene, const Vec3& origin, const Vec3& direction,
                                   double max_range = std::numeric_limits<double>::infinity()) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw DomainError("cast_ray: direction must be a unit vector");
  std::optional<Hit> best;
  for (const auto& prim : scene.primitives) {
    const auto t = std::visit([&](const auto& p) { return detail::intersect(p, origin, direction); }, prim);
    if (t && *t <= max_range && (!best || *t < best->range)) best = Hit{*t, reflectivity_of(prim)};
  }
  return best;
}

/**
 * Scene files use the shared key/value grammar with repeatable keys:
 *
 *   plane  = px py pz  nx ny nz  reflectivity
 *   sphere = cx cy cz  radius    reflectivity
 *   box    = x0 y0 z0  x1 y1 z1  reflectivity
 */
inline Scene parse_scene(const KvDocument& doc) {
  Scene scene;
  for (const auto& e : doc.entries()) {
    const auto v = doc.numbers(e);
    auto need = [&](std::size_t n) {
      if (v.size() != n) doc.fail(e.line, "'" + e.key + "' expects " + std::to_string(n) + " numbers");
    };
    if (e.key == "plane") {
      need(7);
      scene.primitives.emplace_back(Plane{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6]});
    } else if (e.key == "sphere") {
      need(5);
      scene.primitives.emplace_back(Sphere{{v[0], v[1], v[2]}, v[3], v[4]});
    } else if (e.key == "box") {
      need(7);
      scene.primitives.emplace_back(Box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, v[6]});
    } else {
      doc.unknown(e);
    }
  }
  scene.validate();
  return scene;
}

inline Scene load_scene(const std::string& path) { return parse_scene(KvDocument::load(path)); }

}  // namespace lidar_emi

#endif  // LIDAR_EMI_SCENE_HPP
