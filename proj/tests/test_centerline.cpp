#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

#include "helpers.hpp"
#include "vscan/centerline.hpp"
#include "vscan/rng.hpp"

using namespace vscan;
using vscan::testing::buffered_views;
using vscan::testing::cylinder_clouds;

namespace {

std::vector<Vec3> axis_z_cylinder(double radius, int n = 120) {
  // Three rings along z so the data is full-rank.
  std::vector<Vec3> pts;
  for (int ring = 0; ring < 3; ++ring)
    for (int k = 0; k < n / 3; ++k) {
      const double th = 2.0 * M_PI * k / (n / 3);
      pts.emplace_back(radius * std::cos(th), radius * std::sin(th), 4.0 * ring);
    }
  return pts;
}

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

struct RandomInstance {
  std::vector<Vec3> points;
  Vec3 centroid;
  double n1, n2, radius;
  StabilizationPrior prior;
};

RandomInstance random_instance(Rng& rng, int max_points = 200) {
  RandomInstance inst;
  const int n = 20 + static_cast<int>(rng.below(max_points - 20));
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), 2.0 + rng.uniform01()).normalized();
  const double radius = rng.uniform(3.0, 12.0);
  const Mat3 f = frame_with_z(axis);
  for (int i = 0; i < n; ++i) {
    const double th = rng.uniform(0, 2 * M_PI);
    const double s = rng.uniform(-15, 15);
    inst.points.push_back(s * f.col(2) +
                          radius * (std::cos(th) * f.col(0) + std::sin(th) * f.col(1)) +
                          Vec3(rng.normal(0, 0.3), rng.normal(0, 0.3), rng.normal(0, 0.3)));
  }
  inst.centroid = centroid_of(inst.points);
  // Parameters away from the origin and the atan2 branch cut.
  auto sample_pair = [&](double& a, double& b) {
    do {
      a = rng.uniform(-1.2, 1.2);
      b = rng.uniform(-1.2, 1.2);
    } while (std::hypot(a, b) < 0.05 || (a < 0.0 && std::abs(b) < 0.05));
  };
  sample_pair(inst.n1, inst.n2);
  sample_pair(inst.prior.n1, inst.prior.n2);
  inst.radius = rng.uniform(2.0, 14.0);
  inst.prior.radius_mm = rng.uniform(2.0, 14.0);
  return inst;
}

}  // namespace

TEST_CASE("objective at the exact fit reduces to the slack penalty") {
  const auto pts = axis_z_cylinder(10.0);
  const Vec3 c = centroid_of(pts);
  OptimizerConfig cfg;
  const StabilizationPrior prev{0.0, 0.0, 10.0};
  const double f = objective(pts, c, 0.0, 0.0, 10.0, cfg.eps_min_mm, prev, cfg);
  CHECK(f == doctest::Approx(0.5 * cfg.eps_min_mm * cfg.eps_min_mm).epsilon(1e-9));
}

TEST_CASE("objective with a 1 mm radius error splits into data and prior terms") {
  const auto pts = axis_z_cylinder(10.0);
  const Vec3 c = centroid_of(pts);
  OptimizerConfig cfg;
  const StabilizationPrior prev{0.0, 0.0, 10.0};
  const double f = objective(pts, c, 0.0, 0.0, 9.0, cfg.eps_min_mm, prev, cfg);
  // (1/2N) sum (10-9)^2 = 0.5, plus lambda2/2 * 1 = 0.5, plus eps^2/2.
  CHECK(f == doctest::Approx(1.0 + 0.5 * cfg.eps_min_mm * cfg.eps_min_mm).epsilon(1e-9));
}

TEST_CASE("orientation stabilization term equals (pi/2)^2 / 2 for a quarter turn") {
  const auto pts = axis_z_cylinder(10.0);
  const Vec3 c = centroid_of(pts);
  OptimizerConfig with;
  OptimizerConfig without;
  without.lambda_orientation = 0.0;
  const StabilizationPrior prev{1.0, 0.0, 10.0};
  const double f1 = objective(pts, c, 0.0, 1.0, 10.0, with.eps_min_mm, prev, with);
  const double f0 = objective(pts, c, 0.0, 1.0, 10.0, without.eps_min_mm, prev, without);
  CHECK(f1 - f0 == doctest::Approx(0.5 * (M_PI / 2) * (M_PI / 2)).epsilon(1e-12));
}

TEST_CASE("objective requires six points") {
  OptimizerConfig cfg;
  const std::vector<Vec3> few = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  CHECK_THROWS_AS(objective(few, Vec3::Zero(), 0, 0, 5, 1e-6, std::nullopt, cfg),
                  InsufficientDataError);
  CHECK_THROWS_AS(
      gradient_direction(few, Vec3::Zero(), 0, 0, 5, std::nullopt, cfg),
      InsufficientDataError);
}

TEST_CASE("gradient vanishes at the exact fit") {
  const auto pts = axis_z_cylinder(10.0);
  const Vec3 c = centroid_of(pts);
  OptimizerConfig cfg;
  const StabilizationPrior prev{0.0, 0.0, 10.0};
  const auto g = gradient_direction(pts, c, 0.0, 0.0, 10.0, prev, cfg);
  CHECK(std::abs(g.x()) < 1e-9);
  CHECK(std::abs(g.y()) < 1e-9);
}

TEST_CASE("analytic gradient matches central finite differences") {
  OptimizerConfig cfg;
  Rng rng(20240601);
  const double h = 1e-6;
  for (int trial = 0; trial < 40; ++trial) {
    const RandomInstance inst = random_instance(rng);
    auto f = [&](double a, double b) {
      return objective(inst.points, inst.centroid, a, b, inst.radius, cfg.eps_min_mm,
                       inst.prior, cfg);
    };
    const Eigen::Vector2d fd((f(inst.n1 + h, inst.n2) - f(inst.n1 - h, inst.n2)) / (2 * h),
                             (f(inst.n1, inst.n2 + h) - f(inst.n1, inst.n2 - h)) / (2 * h));
    const Eigen::Vector2d an = gradient_direction(inst.points, inst.centroid, inst.n1,
                                                  inst.n2, inst.radius, inst.prior, cfg);
    const double rel = (an - fd).norm() / std::max(fd.norm(), 1e-2);
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("on-axis points contribute a zero subgradient") {
  auto pts = axis_z_cylinder(10.0);
  pts.push_back(Vec3(0, 0, 2.0));  // exactly on the axis
  OptimizerConfig cfg;
  const Vec3 c = Vec3::Zero();
  CHECK_NOTHROW(gradient_direction(pts, c, 0.0, 0.0, 10.0, std::nullopt, cfg));
  const auto g = gradient_direction(pts, c, 0.0, 0.0, 10.0, std::nullopt, cfg);
  CHECK(std::isfinite(g.x()));
  CHECK(std::isfinite(g.y()));
}

TEST_CASE("plain gradient descent reaches a tight data fit from a tilted start") {
  // Convergence smoke oracle: descend the data-only objective with the
  // analytic gradient from (0.3, -0.2) on 200 noiseless points.
  Rng rng(7);
  const Vec3 axis = Vec3(0.15, -0.1, 1.0).normalized();
  const Mat3 f = frame_with_z(axis);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) {
    // Antipodal pairs keep the sample centroid exactly on the axis, so the
    // fixed-centroid data term can actually reach zero.
    const double th = rng.uniform(0, 2 * M_PI);
    const double s = rng.uniform(-20, 20);
    const Vec3 radial = 8.0 * (std::cos(th) * f.col(0) + std::sin(th) * f.col(1));
    pts.push_back(s * f.col(2) + radial);
    pts.push_back(-s * f.col(2) - radial);
  }
  const Vec3 c = centroid_of(pts);
  OptimizerConfig cfg;
  cfg.lambda_orientation = 0.0;
  cfg.lambda_radius = 0.0;

  double n1 = 0.3, n2 = -0.2;
  double r = estimate_radius(pts, c, Vec3(n1, n2, 1.0));
  auto value = [&](double a, double b) {
    return objective(pts, c, a, b, r, cfg.eps_min_mm, std::nullopt, cfg);
  };
  for (int round = 0; round < 40; ++round) {
    double step = 0.05;
    double fv = value(n1, n2);
    for (int it = 0; it < 25; ++it) {
      const auto g = gradient_direction(pts, c, n1, n2, r, std::nullopt, cfg);
      if (g.norm() < 1e-14) break;
      double f_try = fv;
      while (step > 1e-16) {
        f_try = value(n1 - step * g.x(), n2 - step * g.y());
        if (f_try < fv) break;
        step *= 0.5;
      }
      if (f_try >= fv) break;
      n1 -= step * g.x();
      n2 -= step * g.y();
      fv = f_try;
      step *= 1.6;
    }
    r = estimate_radius(pts, c, Vec3(n1, n2, 1.0));
  }
  const double data_term = value(n1, n2) - 0.5 * cfg.eps_min_mm * cfg.eps_min_mm;
  CHECK(data_term < 1e-10);
}

TEST_CASE("estimate_radius") {
  SUBCASE("perpendicular circle of radius 7.5") {
    const auto clouds = cylinder_clouds(Vec3::Zero(), Vec3::UnitZ(), 7.5, 1, 60, 0.0);
    const auto& pts = clouds[0].points_mm;
    CHECK(estimate_radius(pts, clouds[0].centroid_mm, Vec3::UnitZ()) ==
          doctest::Approx(7.5).epsilon(1e-12));
  }
  SUBCASE("tilted single-frame ellipse still measures the 3D radius") {
    // 45-degree slice of the cylinder x^2 + z^2 = r^2 about the y axis:
    // an ellipse with semi-axes (r, r sqrt 2), yet every point keeps
    // distance r from the 3D axis.
    std::vector<Vec3> pts;
    const double r = 7.5;
    for (int k = 0; k < 90; ++k) {
      const double th = 2.0 * M_PI * k / 90;
      pts.emplace_back(r * std::cos(th), r * std::sin(th), r * std::sin(th));
    }
    const Vec3 c = centroid_of(pts);
    CHECK(estimate_radius(pts, c, Vec3::UnitY()) == doctest::Approx(7.5).epsilon(1e-9));
  }
  SUBCASE("5-degree axis error on a 10 mm cylinder costs under 0.5 mm") {
    const auto clouds = cylinder_clouds(Vec3::Zero(), Vec3::UnitZ(), 10.0, 10, 40, 2.0);
    std::vector<Vec3> pts;
    for (const auto& cl : clouds)
      pts.insert(pts.end(), cl.points_mm.begin(), cl.points_mm.end());
    const Vec3 tilted =
        Eigen::AngleAxisd(5.0 * M_PI / 180.0, Vec3::UnitX()) * Vec3::UnitZ();
    const double r = estimate_radius(pts, centroid_of(pts), tilted);
    CHECK(std::abs(r - 10.0) < 0.5);
  }
  SUBCASE("scale invariance in the direction argument") {
    const auto clouds = cylinder_clouds(Vec3::Zero(), Vec3(0.2, -0.1, 1.0), 6.0, 5, 30, 3.0);
    std::vector<Vec3> pts;
    for (const auto& cl : clouds)
      pts.insert(pts.end(), cl.points_mm.begin(), cl.points_mm.end());
    const Vec3 c = centroid_of(pts);
    const Vec3 dir(0.21, -0.09, 1.0);
    const double r1 = estimate_radius(pts, c, dir);
    const double r2 = estimate_radius(pts, c, 3.7 * dir);
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-12));
  }
}

TEST_CASE("tick_tock_step: cold start converges on the noiseless cylinder") {
  const auto clouds = cylinder_clouds(Vec3(3, -2, 0), Vec3::UnitZ(), 10.0, 10, 40, 2.0);
  const auto views = buffered_views(clouds);
  OptimizerConfig cfg;

  // Anchor hint 15 degrees off the true axis.
  const Vec3 cold = Eigen::AngleAxisd(15.0 * M_PI / 180.0, Vec3::UnitX()) * Vec3::UnitZ();
  std::optional<CenterlineEstimate> est;
  for (int i = 0; i < 20; ++i)
    est = tick_tock_step(views.spread, views.raw, est, cfg, cold);
  REQUIRE(est);
  CHECK(line_angle_deg(est->direction_in_base(), Vec3::UnitZ()) < 0.5);
  CHECK(std::abs(est->radius_mm - 10.0) < 0.1);
  CHECK(est->feasible(cfg));
}

TEST_CASE("tick_tock_step: aneurysm beyond r_h parks on the slack boundary") {
  OptimizerConfig cfg;  // r_h = 15
  const double true_r = 1.2 * cfg.radius_upper_mm;  // 18 mm
  const auto clouds = cylinder_clouds(Vec3::Zero(), Vec3::UnitZ(), true_r, 10, 40, 2.5);
  const auto views = buffered_views(clouds);
  std::optional<CenterlineEstimate> est;
  for (int i = 0; i < 15; ++i) est = tick_tock_step(views.spread, views.raw, est, cfg);
  REQUIRE(est);
  CHECK(est->eps_mm > 0.0);
  CHECK(est->eps_mm > cfg.eps_min_mm);  // slack genuinely absorbing the excess
  CHECK(est->radius_mm <= est->eps_mm + cfg.radius_upper_mm + 1e-12);
  CHECK(est->radius_mm > cfg.radius_upper_mm);  // tracked past the soft bound
}

TEST_CASE("tick_tock_step: degenerate buffer falls back to the previous estimate") {
  OptimizerConfig cfg;
  const auto good = buffered_views(
      cylinder_clouds(Vec3::Zero(), Vec3::UnitZ(), 8.0, 10, 40, 2.0));
  std::optional<CenterlineEstimate> est;
  for (int i = 0; i < 10; ++i) est = tick_tock_step(good.spread, good.raw, est, cfg);
  REQUIRE(est);

  // Paused probe: every cloud identical, the spread view is a plane.
  const auto flat = buffered_views(
      cylinder_clouds(Vec3::Zero(), Vec3::UnitZ(), 8.0, 10, 40, 0.0));
  const auto fallback = tick_tock_step(flat.spread, flat.raw, est, cfg);
  CHECK(fallback.degenerate);
  CHECK(fallback.n1 == est->n1);
  CHECK(fallback.n2 == est->n2);
  CHECK(fallback.radius_mm == est->radius_mm);

  CHECK_THROWS_AS(tick_tock_step(flat.spread, flat.raw, std::nullopt, cfg),
                  ColdStartError);
}

TEST_CASE("tick_tock_step: monotone objective on static data") {
  const auto clouds =
      cylinder_clouds(Vec3::Zero(), Vec3(0.3, 0.2, 1.0), 9.0, 10, 40, 2.0, 0.4, 333);
  const auto views = buffered_views(clouds);
  OptimizerConfig cfg;
  std::optional<CenterlineEstimate> est;
  double prev_obj = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 30; ++i) {
    est = tick_tock_step(views.spread, views.raw, est, cfg);
    CHECK(est->objective_value_mm2 <= prev_obj + 1e-12);
    prev_obj = est->objective_value_mm2;
    CHECK(est->feasible(cfg));
  }
}

TEST_CASE("tick_tock_step: rotational equivariance on noiseless data") {
  OptimizerConfig cfg;
  const Vec3 axis = Vec3(0.1, 0.25, 1.0).normalized();
  const auto clouds = cylinder_clouds(Vec3(5, 1, -2), axis, 7.0, 10, 48, 2.0);
  const auto views = buffered_views(clouds);
  std::optional<CenterlineEstimate> a;
  for (int i = 0; i < 15; ++i) a = tick_tock_step(views.spread, views.raw, a, cfg, axis);

  const Mat3 rot =
      Eigen::AngleAxisd(0.7, Vec3(1, 2, -1).normalized()).toRotationMatrix();
  auto rotate_all = [&](const std::vector<Vec3>& pts) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(rot * p);
    return out;
  };
  const auto spread_r = rotate_all(views.spread);
  const auto raw_r = rotate_all(views.raw);
  std::optional<CenterlineEstimate> b;
  for (int i = 0; i < 15; ++i)
    b = tick_tock_step(spread_r, raw_r, b, cfg, rot * axis);

  CHECK(line_angle_deg(rot * a->direction_in_base(), b->direction_in_base()) < 0.1);
  CHECK(a->radius_mm == doctest::Approx(b->radius_mm).epsilon(1e-6));
}

TEST_CASE("tick_tock_step: feasibility over randomized calls") {
  OptimizerConfig cfg;
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 axis =
        Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 1.0).normalized();
    const double radius = rng.uniform(2.0, 17.0);
    const auto clouds = cylinder_clouds(
        Vec3(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)), axis,
        radius, 8, 24, rng.uniform(1.0, 3.0), rng.uniform(0.0, 0.5), 5000 + trial);
    const auto views = buffered_views(clouds);
    std::optional<CenterlineEstimate> est;
    for (int i = 0; i < 3; ++i) {
      est = tick_tock_step(views.spread, views.raw, est, cfg, axis);
      CHECK(est->feasible(cfg));
    }
  }
}
