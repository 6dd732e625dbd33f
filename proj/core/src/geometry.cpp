#include "vscan/geometry.hpp"

#include <cmath>
#include <string>

namespace vscan {

Vec3 pixel_to_probe(const ImageCalibration& cal, double u, double v) {
  cal.validate();
  if (u < 0.0 || u > static_cast<double>(cal.lateral_px))
    throw DomainError("pixel_to_probe: lateral index u=" + std::to_string(u) +
                      " outside [0, " + std::to_string(cal.lateral_px) + "]");
  if (v < 0.0 || v > static_cast<double>(cal.axial_px))
    throw DomainError("pixel_to_probe: axial index v=" + std::to_string(v) +
                      " outside [0, " + std::to_string(cal.axial_px) + "]");
  const double x = cal.lateral_scale_mm_per_px() * u - cal.probe_footprint_mm / 2.0;
  const double z = cal.axial_scale_mm_per_px() * v + cal.element_offset_mm;
  return Vec3(x, 0.0, z);
}

Vec3 image_to_base(const Pose& robot_pose_bf, const Pose& mount_fp,
                   const ImageCalibration& cal, double u, double v) {
  return robot_pose_bf.compose(mount_fp).apply_point(pixel_to_probe(cal, u, v));
}

Eigen::Vector2d base_to_pixel(const Pose& probe_pose_bp,
                              const ImageCalibration& cal, const Vec3& p_b_mm) {
  const Vec3 p_p = probe_pose_bp.inverse().apply_point(p_b_mm);
  const double u = (p_p.x() + cal.probe_footprint_mm / 2.0) / cal.lateral_scale_mm_per_px();
  const double v = (p_p.z() - cal.element_offset_mm) / cal.axial_scale_mm_per_px();
  return {u, v};
}

Vec3 plane_normal_from_points(const Vec3& p1, const Vec3& p2, const Vec3& p3,
                              const Vec3& reference) {
  const Vec3 cross = (p2 - p1).cross(p3 - p1);
  const double area = 0.5 * cross.norm();
  if (area <= 1e-6)
    throw DegenerateGeometryError(
        "plane_normal_from_points: points are (near-)collinear, triangle area " +
        std::to_string(area) + " mm^2");
  Vec3 n = cross.normalized();
  if (n.dot(reference) < 0.0) n = -n;
  return n;
}

Mat3 frame_with_z(const Vec3& z_axis) {
  const Vec3 z = z_axis.normalized();
  // Seed with whichever canonical axis is furthest from z, so the completion
  // is well-conditioned and reproducible.
  Vec3 seed = Vec3::UnitX();
  if (std::abs(z.x()) > std::abs(z.y()) && std::abs(z.x()) > std::abs(z.z()))
    seed = Vec3::UnitY();
  const Vec3 x = seed.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

double line_angle_deg(const Vec3& a, const Vec3& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) throw DomainError("line_angle_deg: zero-length direction");
  const double c = std::min(1.0, std::abs(a.dot(b)) / denom);
  return std::acos(c) * 180.0 / M_PI;
}

}  // namespace vscan
