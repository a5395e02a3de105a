#ifndef LIDAR_EMI_CLOUD_IO_HPP
#define LIDAR_EMI_CLOUD_IO_HPP

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "lidar_emi/error.hpp"
#include "lidar_emi/point_cloud.hpp"
#include "lidar_emi/scan.hpp"

namespace lidar_emi {

/// config_id given to clouds read from binary files.
inline constexpr const char* kBinConfigId = "bin";

namespace detail {
inline float load_f32le(const unsigned char* p) {
  const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(u);
}

inline void store_f32le(unsigned char* p, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  p[0] = static_cast<unsigned char>(u);
  p[1] = static_cast<unsigned char>(u >> 8);
  p[2] = static_cast<unsigned char>(u >> 16);
  p[3] = static_cast<unsigned char>(u >> 24);
}
}  // namespace detail

/// Parses records of four little-endian float32 (x, y, z, intensity).
inline PointCloud decode_cloud_bin(const std::vector<unsigned char>& bytes) {
  constexpr std::size_t kRecord = 16;
  PointCloud pc;
  pc.config_id = kBinConfigId;
  const std::size_t whole = bytes.size() / kRecord;
  if (bytes.size() % kRecord != 0) throw FormatError("truncated record", whole * kRecord);
  pc.points.reserve(whole);
  for (std::size_t i = 0; i < whole; ++i) {
    std::array<float, 4> v{};
    for (std::size_t c = 0; c < 4; ++c) {
      v[c] = detail::load_f32le(bytes.data() + i * kRecord + c * 4);
      if (!std::isfinite(v[c])) throw FormatError("non-finite value", i * kRecord + c * 4);
    }
    Point p = Point::from_cartesian({v[0], v[1], v[2]}, v[3], RayId{i, 0});
    p.source_xyz = std::array<float, 3>{v[0], v[1], v[2]};
    pc.points.push_back(p);
  }
  return pc;
}

inline PointCloud read_cloud_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return decode_cloud_bin(bytes);
}

/// Valid points only; a point still carrying its source floats is written
/// back with exactly those floats.
inline std::vector<unsigned char> encode_cloud_bin(const PointCloud& pc) {
  std::vector<unsigned char> bytes;
  bytes.reserve(pc.points.size() * 16);
  for (const auto& p : pc.points) {
    if (!p.valid) continue;
    std::array<float, 3> xyz{};
    if (p.source_xyz) {
      xyz = *p.source_xyz;
    } else {
      const Vec3 c = p.cartesian();
      xyz = {static_cast<float>(c.x), static_cast<float>(c.y), static_cast<float>(c.z)};
    }
    const std::array<float, 4> rec{xyz[0], xyz[1], xyz[2], static_cast<float>(p.intensity)};
    const std::size_t at = bytes.size();
    bytes.resize(at + 16);
    for (std::size_t c = 0; c < 4; ++c) {
      if (!std::isfinite(rec[c])) throw FormatError("non-finite value", at + c * 4);
      detail::store_f32le(bytes.data() + at + c * 4, rec[c]);
    }
  }
  return bytes;
}

inline void write_cloud_bin(const PointCloud& pc, const std::string& path) {
  const auto bytes = encode_cloud_bin(pc);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

/// Header: cycle,timestamp_s,temperature_c,rail_0_v..rail_N_v,rpm
inline void write_monitoring_csv(std::ostream& out, const std::vector<MonitoringReadout>& readouts) {
  const std::size_t rails = readouts.empty() ? 0 : readouts.front().voltage_rails.size();
  out << "cycle,timestamp_s,temperature_c";
  for (std::size_t i = 0; i < rails; ++i) out << ",rail_" << i << "_v";
  out << ",rpm\n";
  char buf[64];
  for (std::size_t k = 0; k < readouts.size(); ++k) {
    const auto& r = readouts[k];
    out << k;
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.timestamp, r.temperature);
    out << buf;
    for (std::size_t i = 0; i < rails; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", i < r.voltage_rails.size() ? r.voltage_rails[i] : 0.0);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.rpm);
    out << buf;
  }
}

/// Header: cycle,timestamp_s,state,fault_code,level. One row per active
/// fault, or a single row with empty fault columns for a clean cycle.
inline void write_state_trace_csv(std::ostream& out, const ScanResult& scan) {
  out << "cycle,timestamp_s,state,fault_code,level\n";
  char buf[48];
  for (std::size_t k = 0; k < scan.states.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", k, k < scan.readouts.size() ? scan.readouts[k].timestamp : 0.0);
    const std::string prefix = buf + std::string(to_string(scan.states[k]));
    const auto* faults = k < scan.faults.size() ? &scan.faults[k] : nullptr;
    if (faults == nullptr || faults->empty()) {
      out << prefix << ",,\n";
      continue;
    }
    for (const auto& f : *faults) out << prefix << ',' << to_string(f.code) << ',' << to_string(f.level) << '\n';
  }
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_CLOUD_IO_HPP
