#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "vscan/geometry.hpp"

namespace vscan {

/// One frame's detected vessel-boundary points, in the robot base frame {b}.
struct BoundaryCloud {
  std::vector<Vec3> points_mm;
  Vec3 centroid_mm = Vec3::Zero();
  double timestamp_s = 0.0;
  Pose source_pose;  // probe pose at acquisition
  bool visible = true;

  static BoundaryCloud from_points(std::vector<Vec3> pts, double t_s,
                                   const Pose& pose, bool visible = true) {
    BoundaryCloud c;
    c.points_mm = std::move(pts);
    c.timestamp_s = t_s;
    c.source_pose = pose;
    c.visible = visible;
    if (!c.points_mm.empty()) {
      Vec3 sum = Vec3::Zero();
      for (const auto& p : c.points_mm) sum += p;
      c.centroid_mm = sum / static_cast<double>(c.points_mm.size());
    }
    return c;
  }

  bool empty() const { return points_mm.empty(); }
  std::size_t size() const { return points_mm.size(); }
};

/// True when the centered cloud is (near-)planar: smallest singular value
/// below rel_tol times the largest.
bool cloud_is_planar(const std::vector<Vec3>& points_mm, double rel_tol = 1e-6);

/// FIFO of the newest `capacity` boundary clouds with centroid spreading
/// applied on read. Stored clouds are never mutated; spreading shifts each
/// cloud by mu * (C_j - C_1) where Omega_1 is the oldest buffered cloud.
/// push and the read methods may be called from two different threads.
class CloudRingBuffer {
 public:
  explicit CloudRingBuffer(std::size_t capacity, double spread_mu = 5.0)
      : capacity_(capacity), mu_(spread_mu) {
    if (capacity == 0) throw DomainError("CloudRingBuffer: capacity must be >= 1");
    if (spread_mu < 0.0) throw DomainError("CloudRingBuffer: mu must be >= 0");
  }

  /// Append a cloud, evicting the oldest when over capacity.
  /// Throws EmptyInputError for an empty cloud (the frame is skipped upstream).
  void push(const BoundaryCloud& cloud);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  bool is_full() const;
  double spread_mu() const { return mu_; }

  /// Flat list of points with the centroid-shift spreading applied.
  /// Throws EmptyBufferError when empty.
  std::vector<Vec3> spread_view() const;

  /// Raw (unspread) union of buffered points, oldest first.
  std::vector<Vec3> raw_view() const;

  /// Coplanarity diagnostic of the current spread view.
  bool spread_degenerate(double rel_tol = 1e-6) const;

  /// Max distance from the oldest centroid to any other buffered centroid;
  /// 0 for a single cloud. A cheap gauge of how far the probe travelled.
  double centroid_span_mm() const;

  std::vector<BoundaryCloud> snapshot() const;

  void clear();

 private:
  std::size_t capacity_;
  double mu_;
  mutable std::mutex mutex_;
  std::deque<BoundaryCloud> slots_;
};

/// ASCII PLY dump for offline inspection of a point list.
void save_ply(const std::vector<Vec3>& points_mm, const std::string& path);

}  // namespace vscan
