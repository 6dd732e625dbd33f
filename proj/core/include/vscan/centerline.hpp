#pragma once

#include <optional>
#include <vector>

#include "vscan/geometry.hpp"

namespace vscan {

/// Bounds, stabilization weights and solver knobs for the centerline fit.
struct OptimizerConfig {
  double radius_lower_mm = 1.0;    // r_l, strict lower bound
  double radius_upper_mm = 15.0;   // r_h, softened upper bound
  double lambda_orientation = 1.0; // weight on the arctan stabilization term
  double lambda_radius = 1.0;      // weight on the radius stabilization term
  double eps_min_mm = 1e-6;        // slack floor, keeps eps strictly positive
  int tick_tock_rounds = 1;        // solver rounds per frame (applied by the caller)
  int inner_max_iters = 50;        // gradient steps per tick
  double convergence_tol_mm2 = 1e-10;
  /// Re-anchor when the previous estimate's transverse magnitude
  /// hypot(n1, n2) exceeds this; keeps the fixed-third-component
  /// parameterization well away from 90 degrees.
  double reanchor_threshold = 0.9;

  void validate() const {
    if (!(radius_lower_mm < radius_upper_mm))
      throw DomainError("OptimizerConfig: requires r_l < r_h");
    if (lambda_orientation < 0.0 || lambda_radius < 0.0)
      throw DomainError("OptimizerConfig: lambdas must be >= 0");
    if (!(eps_min_mm > 0.0))
      throw DomainError("OptimizerConfig: eps_min must be > 0");
  }
};

/// Stabilization reference: the last optimized (n1, n2, r_v), expressed in
/// the same anchor frame as the current parameters.
struct StabilizationPrior {
  double n1 = 0.0;
  double n2 = 0.0;
  double radius_mm = 0.0;
};

/// Centerline fit result. The direction is parameterized (n1, n2, 1) in the
/// anchor frame; the base-frame direction is the anchor rotation applied to
/// the normalized parameter vector. objective_value is the data + slack part
/// of the cost on the spread view at these parameters (the stabilization
/// terms vanish there, since the estimate anchors the next solve).
struct CenterlineEstimate {
  double n1 = 0.0;
  double n2 = 0.0;
  double radius_mm = 0.0;
  double eps_mm = 0.0;
  Pose anchor_frame;
  Vec3 centroid_mm = Vec3::Zero();
  double objective_value_mm2 = 0.0;
  bool degenerate = false;

  Vec3 direction_in_base() const {
    return (anchor_frame.rotation * Vec3(n1, n2, 1.0)).normalized();
  }

  StabilizationPrior prior() const { return {n1, n2, radius_mm}; }

  bool feasible(const OptimizerConfig& cfg) const {
    return eps_mm >= cfg.eps_min_mm && radius_mm > cfg.radius_lower_mm &&
           radius_mm <= eps_mm + cfg.radius_upper_mm;
  }
};

/// Full objective: (1/2N) sum_i[(|CP_i x n|/|n| - r)^2 + eps^2]
///   + (l1/2)(atan2(n2,n1) - atan2(n2',n1'))^2 + (l2/2)(r - r')^2,
/// with n = (n1, n2, 1). The angular difference is taken as its principal
/// value in [-pi, pi]; the raw difference has a spurious 2*pi cliff at the
/// atan2 branch cut. Points, C and (n1, n2) must share one frame.
/// Stabilization terms are dropped when no prior is given.
/// Throws InsufficientDataError for fewer than 6 points.
double objective(const std::vector<Vec3>& points_mm, const Vec3& centroid_mm,
                 double n1, double n2, double radius_mm, double eps_mm,
                 const std::optional<StabilizationPrior>& prev,
                 const OptimizerConfig& cfg);

/// Analytic (d f / d n1, d f / d n2) of the data + orientation terms at fixed
/// r and eps. A point lying on the axis contributes zero (subgradient choice);
/// the orientation gradient is zero at n1 = n2 = 0.
Eigen::Vector2d gradient_direction(const std::vector<Vec3>& points_mm,
                                   const Vec3& centroid_mm, double n1, double n2,
                                   double radius_mm,
                                   const std::optional<StabilizationPrior>& prev,
                                   const OptimizerConfig& cfg);

/// Mean perpendicular distance from the points to the line through C along n_v.
double estimate_radius(const std::vector<Vec3>& points_mm, const Vec3& centroid_mm,
                       const Vec3& direction);

/// One alternating round: TICK fixes (r, eps) and descends the direction on
/// the spread points; TOCK fixes the direction and solves (r, eps) on the raw
/// points in closed form, projecting onto eps >= eps_min, r > r_l,
/// r <= eps + r_h with the slack absorbing any overflow. On the same data the
/// returned objective never exceeds the previous one. A planar spread view
/// returns the previous estimate flagged degenerate, or throws ColdStartError
/// when there is none. `cold_start_axis` anchors the very first solve.
CenterlineEstimate tick_tock_step(const std::vector<Vec3>& spread_points_mm,
                                  const std::vector<Vec3>& raw_points_mm,
                                  const std::optional<CenterlineEstimate>& prev,
                                  const OptimizerConfig& cfg,
                                  const Vec3& cold_start_axis = Vec3(0, 0, 1));

}  // namespace vscan
