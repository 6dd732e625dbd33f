#pragma once

#include <optional>
#include <vector>

#include "vscan/cloud_buffer.hpp"
#include "vscan/geometry.hpp"
#include "vscan/rng.hpp"

namespace vscan {

/// Ground-truth tubular phantom: a centerline polyline in {b} (extended to
/// infinity past both ends for slicing), a radius profile over arclength,
/// and the skin-surface plane used for n_s.
class TubePhantom {
 public:
  struct CenterlineHit {
    double arclength_mm = 0.0;
    Vec3 point_mm = Vec3::Zero();
    double distance_mm = 0.0;
  };

  static TubePhantom straight(const Vec3& start_mm, const Vec3& direction,
                              double length_mm, double radius_mm);
  static TubePhantom polyline(std::vector<Vec3> vertices_mm, double radius_mm);
  /// Helical arc around the given axis, tessellated internally.
  static TubePhantom helix(const Vec3& axis_point_mm, const Vec3& axis_dir,
                           double helix_radius_mm, double pitch_mm, double turns,
                           double radius_mm);

  /// Gaussian bump (amp > 0, aneurysm) or dip (amp < 0, stenosis) on the
  /// radius profile, centered at the given arclength.
  void set_radius_bump(double amplitude_mm, double center_mm, double sigma_mm);

  void set_surface(const Vec3& point_mm, const Vec3& outward_normal);

  double radius_at(double arclength_mm) const;
  Vec3 point_at(double arclength_mm) const;
  Vec3 tangent_at(double arclength_mm) const;
  double length_mm() const { return cumulative_.back(); }

  /// Nearest point on the (extended) centerline.
  CenterlineHit nearest(const Vec3& p_mm) const;

  /// First intersection of the centerline with the plane through `origin`
  /// with the given unit normal; nullopt when the centerline never crosses.
  std::optional<CenterlineHit> plane_hit(const Vec3& plane_origin_mm,
                                         const Vec3& plane_normal) const;

  const Vec3& surface_point_mm() const { return surface_point_mm_; }
  const Vec3& surface_normal() const { return surface_normal_; }

 private:
  TubePhantom() = default;
  void finalize();

  std::vector<Vec3> vertices_mm_;
  std::vector<double> cumulative_;
  double base_radius_mm_ = 5.0;
  double bump_amp_mm_ = 0.0;
  double bump_center_mm_ = 0.0;
  double bump_sigma_mm_ = 1.0;
  Vec3 surface_point_mm_ = Vec3::Zero();
  Vec3 surface_normal_ = Vec3(0, 0, 1);
};

/// Synthetic segmentation-error model. Owns its RNG state: single owner,
/// not copyable; identical seeds give identical streams.
struct NoiseModel {
  double boundary_jitter_sigma_mm = 0.0;
  double outlier_rate = 0.0;
  double dropout_rate = 0.0;
  double false_positive_rate = 0.0;
  Rng rng;

  NoiseModel(double jitter_sigma_mm, double outlier, double dropout,
             double false_positive, std::uint64_t seed);
  NoiseModel(const NoiseModel&) = delete;
  NoiseModel& operator=(const NoiseModel&) = delete;
  NoiseModel(NoiseModel&&) = default;
  NoiseModel& operator=(NoiseModel&&) = default;
};

/// Intersect the image plane (x-z plane of the probe pose, clipped to the
/// field of view) with the tube; returns n_points boundary samples in {b},
/// ordered by in-plane angle. No intersection inside the FOV gives an empty
/// cloud with visible=false, not an error.
BoundaryCloud slice_tube(const TubePhantom& phantom, const Pose& image_plane_pose,
                         const ImageCalibration& cal, int n_points,
                         double timestamp_s = 0.0);

/// Apply jitter, dropout and outlier replacement. Outliers are redrawn
/// uniformly inside the current FOV rectangle. Deterministic given the seed.
BoundaryCloud corrupt_cloud(const BoundaryCloud& cloud, NoiseModel& noise,
                            const ImageCalibration& cal);

/// With probability false_positive_rate, append a second elliptical cluster
/// at a random FOV spot at least 2*true_radius from the true centroid.
std::vector<BoundaryCloud> spawn_false_candidate(const BoundaryCloud& cloud,
                                                 NoiseModel& noise,
                                                 const ImageCalibration& cal,
                                                 double true_radius_mm);

}  // namespace vscan
