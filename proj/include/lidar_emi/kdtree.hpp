#ifndef LIDAR_EMI_KDTREE_HPP
#define LIDAR_EMI_KDTREE_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lidar_emi/geometry.hpp"

namespace lidar_emi {

/// Exact nearest-neighbour search over a fixed 3-D point set.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(points_.size());
    if (!points_.empty()) build(0, order_.size(), 0);
  }

  bool empty() const noexcept { return points_.empty(); }

  /// Squared distance to the nearest point. The search may stop as soon as a
  /// candidate closer than sqrt(stop_below) is found, in which case the
  /// returned value is that candidate's squared distance.
  double nearest_squared(const Vec3& q, double stop_below = -1.0) const {
    double best = std::numeric_limits<double>::infinity();
    if (!nodes_.empty()) search(0, q, best, stop_below);
    return best;
  }

 private:
  struct Node {
    std::uint32_t point = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  static double coord(const Vec3& p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

  std::int32_t build(std::size_t lo, std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::uint32_t a, std::uint32_t b) {
                       return coord(points_[a], axis) < coord(points_[b], axis);
                     });
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({order_[mid], -1, -1, static_cast<std::uint8_t>(axis)});
    const auto left = build(lo, mid, depth + 1);
    const auto right = build(mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  bool search(std::int32_t id, const Vec3& q, double& best, double stop_below) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Vec3& p = points_[n.point];
    const double d = (q - p).squared_norm();
    if (d < best) best = d;
    if (best < stop_below) return true;
    const double delta = coord(q, n.axis) - coord(p, n.axis);
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    if (near >= 0 && search(near, q, best, stop_below)) return true;
    if (far >= 0 && delta * delta < best) return search(far, q, best, stop_below);
    return false;
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lidar_emi

#endif  // LIDAR_EMI_KDTREE_HPP
