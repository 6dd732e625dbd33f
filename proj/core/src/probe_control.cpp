#include "vscan/probe_control.hpp"

#include <cmath>

namespace vscan {

namespace {

constexpr double kParallelLimitCos = 0.98480775301220805937;  // cos(10 deg)

Vec3 rotation_vector(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Mat3 exp_rotation(const Vec3& phi) {
  const double angle = phi.norm();
  if (angle < 1e-14) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, phi / angle).toRotationMatrix();
}

}  // namespace

Mat3 target_orientation(const Vec3& vessel_dir, const Vec3& surface_normal,
                        const std::optional<Vec3>& prev_y) {
  if (vessel_dir.norm() == 0.0 || surface_normal.norm() == 0.0)
    throw DomainError("target_orientation: zero-length input direction");
  Vec3 y = vessel_dir.normalized();
  const Vec3 ns = surface_normal.normalized();
  if (std::abs(y.dot(ns)) >= kParallelLimitCos)
    throw DegenerateGeometryError(
        "target_orientation: vessel direction within 10 deg of the surface normal");
  if (prev_y && y.dot(*prev_y) < 0.0) y = -y;

  const Vec3 z = (ns - ns.dot(y) * y).normalized();
  const Vec3 x = y.cross(z);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

Vec3 centering_offset(double centroid_u_px, const ImageCalibration& cal,
                      const Pose& image_to_base_pose) {
  cal.validate();
  if (centroid_u_px < 0.0 || centroid_u_px > static_cast<double>(cal.lateral_px))
    throw DomainError("centering_offset: centroid " + std::to_string(centroid_u_px) +
                      " outside [0, " + std::to_string(cal.lateral_px) + "]");
  const double du = static_cast<double>(cal.lateral_px) / 2.0 - centroid_u_px;
  const Vec3 in_probe(cal.lateral_scale_mm_per_px() * du, 0.0, 0.0);
  return image_to_base_pose.apply_vector(in_probe);
}

ImpedanceStepResult step_impedance(const PlantState& current, const ProbeCommand& command,
                                   const ImpedanceParams& params,
                                   const SurfaceContact& contact, double dt_s) {
  if (!(dt_s > 0.0) || dt_s > 0.02)
    throw DomainError("step_impedance: dt must be in (0, 0.02] s");
  params.validate();
  command.validate();

  const Mat3& r = current.pose.rotation;
  const Mat3 rt = r.transpose();

  // Pose error in the probe frame, meters / radians.
  const Vec3 e_pos_m = rt * (command.target_pose.translation_mm -
                             current.pose.translation_mm) * 1e-3;
  const Vec3 e_rot = rotation_vector(rt * command.target_pose.rotation);

  // Unilateral surface spring at the probe origin.
  const Vec3 n_out = contact.outward_normal.normalized();
  const double height_mm =
      n_out.dot(current.pose.translation_mm - contact.plane_point_mm);
  const double penetration_m = std::max(0.0, -height_mm) * 1e-3;
  const Vec3 reaction_N = contact.stiffness_N_m * penetration_m * n_out;

  const Vec3 v_body_m_s = rt * current.lin_vel_mm_s * 1e-3;
  const Vec3& k_t = params.stiffness_trans_N_m;
  const Vec3& k_r = params.stiffness_rot_Nm_rad;
  const Vec3 d_t = 2.0 * params.damping_ratio *
                   (k_t * params.mass_kg).cwiseSqrt();
  const Vec3 d_r = 2.0 * params.damping_ratio *
                   (k_r * params.inertia_kgm2).cwiseSqrt();

  // F_ext and F_d enter as wrenches the probe exerts on the environment;
  // the reaction on the probe is the negative of the contact wrench.
  const Vec3 force_body = k_t.cwiseProduct(e_pos_m) - d_t.cwiseProduct(v_body_m_s) +
                          rt * reaction_N + params.desired_force_N;
  const Vec3 torque_body = k_r.cwiseProduct(e_rot) -
                           d_r.cwiseProduct(current.ang_vel_rad_s) +
                           params.desired_torque_Nm;

  ImpedanceStepResult out;
  out.contact_force_N = reaction_N;
  out.contact_magnitude_N = reaction_N.norm();

  const Vec3 acc_body_m_s2 = force_body / params.mass_kg;
  const Vec3 ang_acc = torque_body / params.inertia_kgm2;

  // Semi-implicit Euler: velocity first, then pose with the fresh velocity.
  PlantState next = current;
  next.lin_vel_mm_s = current.lin_vel_mm_s + dt_s * (r * acc_body_m_s2) * 1e3;
  next.pose.translation_mm = current.pose.translation_mm + dt_s * next.lin_vel_mm_s;
  next.ang_vel_rad_s = current.ang_vel_rad_s + dt_s * ang_acc;
  next.pose.rotation = r * exp_rotation(dt_s * next.ang_vel_rad_s);
  out.next = next;
  return out;
}

}  // namespace vscan
