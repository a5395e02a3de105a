#ifndef LIDAR_EMI_CORRUPTOR_HPP
#define LIDAR_EMI_CORRUPTOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include "lidar_emi/cloud_io.hpp"
#include "lidar_emi/error.hpp"
#include "lidar_emi/point_cloud.hpp"
#include "lidar_emi/random.hpp"

namespace lidar_emi {

struct CorruptionSpec {
  double epsilon = 0.0;  // [m]
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw DomainError("corruption epsilon must be >= 0");
  }
};

/// u_i, uniform on [-epsilon, epsilon], a function of (seed, i) only.
inline double corruption_offset(const CorruptionSpec& spec, std::size_t index) {
  SplitMix64 rng(derive_seed(spec.seed, {index}));
  return spec.epsilon * (2.0 * rng.uniform() - 1.0);
}

/// r' = max(0, r + u_i); angles, intensity and ray ids are untouched.
inline PointCloud corrupt_cloud(const PointCloud& pc, const CorruptionSpec& spec) {
  spec.validate();
  PointCloud out = pc;
  if (spec.epsilon == 0.0) return out;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    Point& p = out.points[i];
    if (!p.valid) throw DomainError("corrupt_cloud: input contains an invalid point");
    const double r = p.r;
    double shifted = std::max(0.0, r + corruption_offset(spec, i));
    // Rounding of r + u must not push the shift past epsilon.
    while (std::abs(shifted - r) > spec.epsilon) shifted = std::nextafter(shifted, r);
    if (shifted != r) {
      p.r = shifted;
      p.source_xyz.reset();
    }
  }
  return out;
}

/// Per-file seed from the master seed and the file's path relative to the tree root.
inline std::uint64_t file_seed(std::uint64_t master, const std::filesystem::path& relative) {
  return derive_seed(master, {stable_hash(relative.generic_string())});
}

struct CorruptedFile {
  std::filesystem::path relative;
  std::size_t points = 0;
};

/**
 * Mirrors `in_dir` into `out_dir`. Every regular `.bin` file is corrupted
 * with its own derived seed; all other regular files are copied verbatim.
 * Files are visited in lexicographic order of their relative paths.
 */
inline std::vector<CorruptedFile> corrupt_directory(const std::filesystem::path& in_dir,
                                                    const std::filesystem::path& out_dir, const CorruptionSpec& spec) {
  namespace fs = std::filesystem;
  spec.validate();
  std::error_code ec;
  if (!fs::is_directory(in_dir, ec)) throw IoError("'" + in_dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(in_dir, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file()) files.push_back(fs::relative(it->path(), in_dir));
  }
  if (ec) throw IoError("cannot walk '" + in_dir.string() + "': " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<CorruptedFile> out;
  for (const auto& rel : files) {
    const fs::path dst = out_dir / rel;
    fs::create_directories(dst.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + dst.parent_path().string() + "': " + ec.message());
    if (rel.extension() == ".bin") {
      const PointCloud pc = read_cloud_bin((in_dir / rel).string());
      write_cloud_bin(corrupt_cloud(pc, {spec.epsilon, file_seed(spec.seed, rel)}), dst.string());
      out.push_back({rel, pc.points.size()});
    } else {
      fs::copy_file(in_dir / rel, dst, fs::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("cannot copy '" + rel.string() + "': " + ec.message());
    }
  }
  return out;
}

}  // namespace lidar_emi

#endif  // LIDAR_EMI_CORRUPTOR_HPP
