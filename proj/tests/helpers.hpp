#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "vscan/cloud_buffer.hpp"
#include "vscan/geometry.hpp"
#include "vscan/rng.hpp"

namespace vscan::testing {

/// Points on circular cross-sections of a cylinder: `n_clouds` rings spaced
/// `spacing_mm` along `axis` through `center`, `per_cloud` points each.
inline std::vector<BoundaryCloud> cylinder_clouds(const Vec3& center, const Vec3& axis,
                                                  double radius_mm, int n_clouds,
                                                  int per_cloud, double spacing_mm,
                                                  double jitter_sigma = 0.0,
                                                  std::uint64_t seed = 0) {
  const Mat3 frame = frame_with_z(axis);
  const Vec3 u = frame.col(0), v = frame.col(1), a = frame.col(2);
  Rng rng(seed == 0 ? 1 : seed);
  std::vector<BoundaryCloud> clouds;
  clouds.reserve(n_clouds);
  for (int j = 0; j < n_clouds; ++j) {
    std::vector<Vec3> pts;
    pts.reserve(per_cloud);
    const Vec3 ring_center = center + spacing_mm * j * a;
    for (int k = 0; k < per_cloud; ++k) {
      const double th = 2.0 * M_PI * k / per_cloud;
      Vec3 p = ring_center + radius_mm * (std::cos(th) * u + std::sin(th) * v);
      if (jitter_sigma > 0.0)
        p += Vec3(rng.normal(0, jitter_sigma), rng.normal(0, jitter_sigma),
                  rng.normal(0, jitter_sigma));
      pts.push_back(p);
    }
    clouds.push_back(BoundaryCloud::from_points(std::move(pts), j * 0.02, Pose::identity()));
  }
  return clouds;
}

struct BufferViews {
  std::vector<Vec3> spread;
  std::vector<Vec3> raw;
};

inline BufferViews buffered_views(const std::vector<BoundaryCloud>& clouds,
                                  double mu = 5.0) {
  CloudRingBuffer buf(clouds.size(), mu);
  for (const auto& c : clouds) buf.push(c);
  return {buf.spread_view(), buf.raw_view()};
}

}  // namespace vscan::testing
