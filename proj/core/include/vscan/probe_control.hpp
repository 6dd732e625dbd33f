#pragma once

#include <optional>

#include "vscan/geometry.hpp"

namespace vscan {

/// Cartesian 6-DoF impedance parameters. Stiffness and damping act about the
/// probe body axes; damping is derived per axis as D = 2 zeta sqrt(K M).
struct ImpedanceParams {
  Vec3 stiffness_trans_N_m = Vec3(1000.0, 1000.0, 300.0);
  Vec3 stiffness_rot_Nm_rad = Vec3(20.0, 20.0, 2.0);
  double damping_ratio = 0.8;
  double mass_kg = 2.0;
  double inertia_kgm2 = 0.02;
  /// Wrench the probe should exert on the environment, body frame (N, Nm).
  Vec3 desired_force_N = Vec3(0.0, 0.0, 5.0);
  Vec3 desired_torque_Nm = Vec3::Zero();
  double force_limit_N = 25.0;

  void validate() const {
    if (stiffness_trans_N_m.minCoeff() <= 0.0 || stiffness_rot_Nm_rad.minCoeff() <= 0.0)
      throw DomainError("ImpedanceParams: stiffness must be positive");
    if (damping_ratio <= 0.0 || damping_ratio > 2.0)
      throw DomainError("ImpedanceParams: damping ratio must be in (0, 2]");
    if (mass_kg <= 0.0 || inertia_kgm2 <= 0.0)
      throw DomainError("ImpedanceParams: inertia must be positive");
    if (force_limit_N <= 0.0)
      throw DomainError("ImpedanceParams: force limit must be positive");
  }
};

/// Motion command for one control period.
struct ProbeCommand {
  Pose target_pose;
  double march_velocity_mm_s = 0.0;
  Vec3 centering_offset_mm = Vec3::Zero();

  void validate() const {
    if (march_velocity_mm_s < 0.0 || march_velocity_mm_s > 20.0)
      throw DomainError("ProbeCommand: march velocity outside [0, 20] mm/s");
    if (target_pose.rotation_defect() > 1e-6)
      throw DomainError("ProbeCommand: target rotation not orthonormal");
  }
};

/// Unilateral spring contact against the skin plane.
struct SurfaceContact {
  Vec3 plane_point_mm = Vec3::Zero();
  Vec3 outward_normal = Vec3(0, 0, 1);
  double stiffness_N_m = 5000.0;
};

/// Probe rigid-body state: pose of the probe frame in {b}, plus twist.
struct PlantState {
  Pose pose;
  Vec3 lin_vel_mm_s = Vec3::Zero();
  Vec3 ang_vel_rad_s = Vec3::Zero();  // body frame
};

struct ImpedanceStepResult {
  PlantState next;
  Vec3 contact_force_N = Vec3::Zero();  // force the surface exerts on the probe
  double contact_magnitude_N = 0.0;
};

/// Probe orientation from the vessel direction and surface normal:
/// Y = +-n_v (sign keeps marching continuous with prev_y), Z = n_s
/// re-orthogonalized against Y, X = Y x Z. Throws DegenerateGeometryError
/// when n_v and n_s are within 10 degrees of parallel.
Mat3 target_orientation(const Vec3& vessel_dir, const Vec3& surface_normal,
                        const std::optional<Vec3>& prev_y = std::nullopt);

/// Lateral displacement that horizontally centers the detected vessel:
/// the rotation-and-scale image of the pixel offset (H/2 - x_c, 0, 0) under
/// the image-to-base chain, with no translation contribution.
Vec3 centering_offset(double centroid_u_px, const ImageCalibration& cal,
                      const Pose& image_to_base_pose);

/// Semi-implicit Euler step of M e_dd + D e_d + K e = F_ext - F_d about the
/// command target, with the unilateral surface spring acting on the probe
/// origin. dt must be in (0, 0.02] s.
ImpedanceStepResult step_impedance(const PlantState& current, const ProbeCommand& command,
                                   const ImpedanceParams& params,
                                   const SurfaceContact& contact, double dt_s);

/// Latching software force stop: trips above the limit and stays tripped
/// until reset() is called.
class SafetyGate {
 public:
  explicit SafetyGate(double force_limit_N = 25.0) : limit_N_(force_limit_N) {}

  /// Returns true while motion may continue.
  bool check(double contact_force_N) {
    if (contact_force_N > limit_N_) halted_ = true;
    return !halted_;
  }

  bool halted() const { return halted_; }
  void reset() { halted_ = false; }
  double limit_N() const { return limit_N_; }

 private:
  double limit_N_;
  bool halted_ = false;
};

}  // namespace vscan
