#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "vscan/errors.hpp"

namespace vscan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid transform in SE(3). Rotation is a proper orthonormal matrix,
/// translation is in millimeters. Immutable value type; all frame
/// relationships ({b},{f},{p},{I}) are carried as Poses.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation_mm = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose from_rt(const Mat3& r, const Vec3& t_mm) { return Pose{r, t_mm}; }

  /// this ∘ other: apply `other` first, then this.
  Pose compose(const Pose& other) const {
    return Pose{rotation * other.rotation,
                rotation * other.translation_mm + translation_mm};
  }

  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return Pose{rt, -(rt * translation_mm)};
  }

  Vec3 apply_point(const Vec3& p_mm) const {
    return rotation * p_mm + translation_mm;
  }

  /// Rotation-only action, for directions and displacements.
  Vec3 apply_vector(const Vec3& v) const { return rotation * v; }

  Mat4 homogeneous() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = rotation;
    m.block<3, 1>(0, 3) = translation_mm;
    return m;
  }

  /// Max of |RᵀR − I| and |det R − 1|; valid rotations keep this below 1e-9.
  double rotation_defect() const {
    const double ortho =
        (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    const double det = std::abs(rotation.determinant() - 1.0);
    return std::max(ortho, det);
  }
};

/// Linear-probe image calibration. `u` is the lateral pixel index (along
/// the probe footprint, count lateral_px), `v` is the axial/depth index
/// (count axial_px). The matrix entries L_p/H and D_I/W fix this role
/// assignment regardless of which direction a viewer draws as "height".
struct ImageCalibration {
  double probe_footprint_mm = 37.5;  // L_p
  double imaging_depth_mm = 40.0;    // D_I
  int lateral_px = 256;              // H
  int axial_px = 256;                // W
  double element_offset_mm = 0.0;    // eps0, standoff from probe tip to first row

  void validate() const {
    if (!(probe_footprint_mm > 0.0) || !(imaging_depth_mm > 0.0))
      throw DomainError("calibration: L_p and D_I must be positive");
    if (lateral_px < 2 || axial_px < 2)
      throw DomainError("calibration: pixel counts must be >= 2");
  }

  double lateral_scale_mm_per_px() const {
    return probe_footprint_mm / static_cast<double>(lateral_px);
  }
  double axial_scale_mm_per_px() const {
    return imaging_depth_mm / static_cast<double>(axial_px);
  }
};

/// Map pixel (u, v) to a point in the probe frame {p}, millimeters.
/// The image plane spans the x-z plane of {p}: x lateral, z depth.
/// Pre: 0 <= u <= lateral_px, 0 <= v <= axial_px (fractional pixels allowed).
Vec3 pixel_to_probe(const ImageCalibration& cal, double u, double v);

/// Chain a pixel through {I} -> {p} -> {f} -> {b}.
Vec3 image_to_base(const Pose& robot_pose_bf, const Pose& mount_fp,
                   const ImageCalibration& cal, double u, double v);

/// Inverse of the in-plane part of pixel_to_probe: project a base-frame point
/// onto the image plane of the given probe pose and return its (u, v) pixels.
/// Out-of-plane offsets are dropped, as a planar detector would.
Eigen::Vector2d base_to_pixel(const Pose& probe_pose_bp,
                              const ImageCalibration& cal, const Vec3& p_b_mm);

/// Unit normal of the plane through three points. The sign is chosen so the
/// normal has positive dot product with `reference` (default +z of {b}).
/// Throws DegenerateGeometryError when the triangle area is <= 1e-6 mm².
Vec3 plane_normal_from_points(const Vec3& p1, const Vec3& p2, const Vec3& p3,
                              const Vec3& reference = Vec3(0, 0, 1));

/// Deterministic orthonormal completion: a rotation whose third column is
/// `z_axis` (normalized). Used to build anchor frames about an axis.
Mat3 frame_with_z(const Vec3& z_axis);

/// Angle in degrees between two directions treated as unsigned lines, in [0, 90].
double line_angle_deg(const Vec3& a, const Vec3& b);

}  // namespace vscan
