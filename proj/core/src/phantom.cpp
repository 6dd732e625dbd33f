#include "vscan/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vscan {

namespace {

constexpr double kMaxKinkDeg = 30.0;

// Distance from p to the segment a-b, optionally extending past either end.
// Returns the clamped parameter t and the closest point.
struct SegHit {
  double t;
  Vec3 point;
  double dist;
};

SegHit nearest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b,
                          bool extend_before, bool extend_after) {
  const Vec3 d = b - a;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(d) / len2 : 0.0;
  if (!extend_before) t = std::max(t, 0.0);
  if (!extend_after) t = std::min(t, 1.0);
  const Vec3 q = a + t * d;
  return {t, q, (p - q).norm()};
}

}  // namespace

TubePhantom TubePhantom::straight(const Vec3& start_mm, const Vec3& direction,
                                  double length_mm, double radius_mm) {
  if (length_mm <= 0.0) throw DomainError("TubePhantom::straight: length must be > 0");
  TubePhantom t;
  t.vertices_mm_ = {start_mm, start_mm + direction.normalized() * length_mm};
  t.base_radius_mm_ = radius_mm;
  t.finalize();
  return t;
}

TubePhantom TubePhantom::polyline(std::vector<Vec3> vertices_mm, double radius_mm) {
  if (vertices_mm.size() < 2)
    throw DomainError("TubePhantom::polyline: need at least two vertices");
  TubePhantom t;
  t.vertices_mm_ = std::move(vertices_mm);
  t.base_radius_mm_ = radius_mm;
  t.finalize();
  return t;
}

TubePhantom TubePhantom::helix(const Vec3& axis_point_mm, const Vec3& axis_dir,
                               double helix_radius_mm, double pitch_mm, double turns,
                               double radius_mm) {
  if (helix_radius_mm <= 0.0 || turns <= 0.0)
    throw DomainError("TubePhantom::helix: radius and turns must be > 0");
  const Mat3 frame = frame_with_z(axis_dir);
  const Vec3 u = frame.col(0), w = frame.col(1), a = frame.col(2);
  // Chord length ~0.5 mm keeps tessellation error far below the noise floor.
  const double total_angle = 2.0 * M_PI * turns;
  const double arc_per_rad =
      std::sqrt(helix_radius_mm * helix_radius_mm +
                std::pow(pitch_mm / (2.0 * M_PI), 2));
  const int steps = std::max(16, static_cast<int>(total_angle * arc_per_rad / 0.5));
  std::vector<Vec3> pts;
  pts.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const double phi = total_angle * i / steps;
    pts.push_back(axis_point_mm + helix_radius_mm * (std::cos(phi) * u + std::sin(phi) * w) +
                  (pitch_mm * phi / (2.0 * M_PI)) * a);
  }
  TubePhantom t;
  t.vertices_mm_ = std::move(pts);
  t.base_radius_mm_ = radius_mm;
  t.finalize();
  return t;
}

void TubePhantom::finalize() {
  if (base_radius_mm_ <= 0.0)
    throw DomainError("TubePhantom: radius must be positive");
  cumulative_.resize(vertices_mm_.size());
  cumulative_[0] = 0.0;
  for (std::size_t i = 1; i < vertices_mm_.size(); ++i) {
    const double seg = (vertices_mm_[i] - vertices_mm_[i - 1]).norm();
    if (seg <= 0.0) throw DomainError("TubePhantom: repeated centerline vertex");
    cumulative_[i] = cumulative_[i - 1] + seg;
  }
  for (std::size_t i = 2; i < vertices_mm_.size(); ++i) {
    const Vec3 d0 = (vertices_mm_[i - 1] - vertices_mm_[i - 2]).normalized();
    const Vec3 d1 = (vertices_mm_[i] - vertices_mm_[i - 1]).normalized();
    const double angle = std::acos(std::clamp(d0.dot(d1), -1.0, 1.0)) * 180.0 / M_PI;
    if (angle >= kMaxKinkDeg)
      throw DomainError("TubePhantom: centerline kink of " + std::to_string(angle) +
                        " deg exceeds " + std::to_string(kMaxKinkDeg));
  }
}

void TubePhantom::set_radius_bump(double amplitude_mm, double center_mm, double sigma_mm) {
  if (sigma_mm <= 0.0) throw DomainError("TubePhantom: bump sigma must be > 0");
  if (base_radius_mm_ + std::min(0.0, amplitude_mm) <= 0.0)
    throw DomainError("TubePhantom: bump would make radius non-positive");
  bump_amp_mm_ = amplitude_mm;
  bump_center_mm_ = center_mm;
  bump_sigma_mm_ = sigma_mm;
}

void TubePhantom::set_surface(const Vec3& point_mm, const Vec3& outward_normal) {
  surface_point_mm_ = point_mm;
  surface_normal_ = outward_normal.normalized();
}

double TubePhantom::radius_at(double s) const {
  double r = base_radius_mm_;
  if (bump_amp_mm_ != 0.0) {
    const double z = (s - bump_center_mm_) / bump_sigma_mm_;
    r += bump_amp_mm_ * std::exp(-0.5 * z * z);
  }
  return r;
}

Vec3 TubePhantom::point_at(double s) const {
  const std::size_t n = vertices_mm_.size();
  if (s <= 0.0) {
    const Vec3 d = (vertices_mm_[1] - vertices_mm_[0]).normalized();
    return vertices_mm_[0] + s * d;
  }
  if (s >= cumulative_.back()) {
    const Vec3 d = (vertices_mm_[n - 1] - vertices_mm_[n - 2]).normalized();
    return vertices_mm_[n - 1] + (s - cumulative_.back()) * d;
  }
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  const double t = (s - cumulative_[i - 1]) / (cumulative_[i] - cumulative_[i - 1]);
  return vertices_mm_[i - 1] + t * (vertices_mm_[i] - vertices_mm_[i - 1]);
}

Vec3 TubePhantom::tangent_at(double s) const {
  const std::size_t n = vertices_mm_.size();
  if (s <= 0.0) return (vertices_mm_[1] - vertices_mm_[0]).normalized();
  if (s >= cumulative_.back())
    return (vertices_mm_[n - 1] - vertices_mm_[n - 2]).normalized();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  return (vertices_mm_[i] - vertices_mm_[i - 1]).normalized();
}

TubePhantom::CenterlineHit TubePhantom::nearest(const Vec3& p) const {
  CenterlineHit best{0.0, Vec3::Zero(), std::numeric_limits<double>::infinity()};
  const std::size_t n = vertices_mm_.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const bool first = (i == 0);
    const bool last = (i + 2 == n);
    const SegHit hit = nearest_on_segment(p, vertices_mm_[i], vertices_mm_[i + 1],
                                          first, last);
    if (hit.dist < best.distance_mm) {
      const double seg_len = cumulative_[i + 1] - cumulative_[i];
      best = {cumulative_[i] + hit.t * seg_len, hit.point, hit.dist};
    }
  }
  return best;
}

std::optional<TubePhantom::CenterlineHit> TubePhantom::plane_hit(
    const Vec3& plane_origin_mm, const Vec3& plane_normal) const {
  const Vec3 n = plane_normal.normalized();
  const std::size_t count = vertices_mm_.size();
  std::optional<CenterlineHit> best;
  double best_offset = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < count; ++i) {
    const Vec3& a = vertices_mm_[i];
    const Vec3& b = vertices_mm_[i + 1];
    const double da = n.dot(a - plane_origin_mm);
    const double db = n.dot(b - plane_origin_mm);
    const Vec3 dir = b - a;
    const double denom = n.dot(dir);
    if (denom == 0.0) continue;
    double t = -da / denom;
    const bool first = (i == 0);
    const bool last = (i + 2 == count);
    if ((t < 0.0 && !first) || (t > 1.0 && !last)) continue;
    (void)db;
    const Vec3 q = a + t * dir;
    // Prefer the crossing nearest the plane origin (probe center).
    const double offset = (q - plane_origin_mm).norm();
    if (offset < best_offset) {
      const double seg_len = cumulative_[i + 1] - cumulative_[i];
      best = CenterlineHit{cumulative_[i] + t * seg_len, q, 0.0};
      best_offset = offset;
    }
  }
  return best;
}

NoiseModel::NoiseModel(double jitter_sigma_mm, double outlier, double dropout,
                       double false_positive, std::uint64_t seed)
    : boundary_jitter_sigma_mm(jitter_sigma_mm),
      outlier_rate(outlier),
      dropout_rate(dropout),
      false_positive_rate(false_positive),
      rng(seed) {
  if (jitter_sigma_mm < 0.0) throw DomainError("NoiseModel: sigma must be >= 0");
  if (outlier < 0.0 || outlier >= 1.0)
    throw DomainError("NoiseModel: outlier_rate must be in [0,1)");
  if (dropout < 0.0 || dropout > 1.0)
    throw DomainError("NoiseModel: dropout_rate must be in [0,1]");
  if (false_positive < 0.0 || false_positive > 1.0)
    throw DomainError("NoiseModel: false_positive_rate must be in [0,1]");
}

namespace {

struct FovFrame {
  Vec3 origin;   // probe frame origin in {b}
  Vec3 lateral;  // x_p in {b}
  Vec3 depth;    // z_p in {b}
  double x_min, x_max, z_min, z_max;

  bool contains(double x, double z) const {
    return x >= x_min && x <= x_max && z >= z_min && z <= z_max;
  }

  Vec3 to_base(double x, double z) const { return origin + x * lateral + z * depth; }
};

FovFrame make_fov(const Pose& pose, const ImageCalibration& cal) {
  FovFrame f;
  f.origin = pose.translation_mm;
  f.lateral = pose.rotation.col(0);
  f.depth = pose.rotation.col(2);
  f.x_min = -cal.probe_footprint_mm / 2.0;
  f.x_max = cal.probe_footprint_mm / 2.0;
  f.z_min = cal.element_offset_mm;
  f.z_max = cal.element_offset_mm + cal.imaging_depth_mm;
  return f;
}

}  // namespace

BoundaryCloud slice_tube(const TubePhantom& phantom, const Pose& image_plane_pose,
                         const ImageCalibration& cal, int n_points, double timestamp_s) {
  if (n_points < 8) throw DomainError("slice_tube: n_points must be >= 8");
  cal.validate();

  const FovFrame fov = make_fov(image_plane_pose, cal);
  const Vec3 plane_normal = image_plane_pose.rotation.col(1);

  const auto hub = phantom.plane_hit(fov.origin, plane_normal);
  if (!hub)
    return BoundaryCloud::from_points({}, timestamp_s, image_plane_pose, false);

  const Vec3 q0 = hub->point_mm;
  // Boundary must land within reach of the FOV to matter at all.
  const double fov_diag = std::hypot(cal.probe_footprint_mm, cal.imaging_depth_mm);
  const double rho_max = 1.5 * fov_diag;

  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double theta = 2.0 * M_PI * k / n_points;
    const Vec3 dir = std::cos(theta) * fov.lateral + std::sin(theta) * fov.depth;
    auto g = [&](double rho) {
      const Vec3 p = q0 + rho * dir;
      const auto near = phantom.nearest(p);
      return near.distance_mm - phantom.radius_at(near.arclength_mm);
    };
    // Expand until the ray exits the tube, then bisect onto the wall.
    double lo = 0.0;
    double hi = phantom.radius_at(hub->arclength_mm);
    bool bracketed = false;
    while (hi <= rho_max) {
      if (g(hi) > 0.0) {
        bracketed = true;
        break;
      }
      lo = hi;
      hi *= 1.7;
    }
    if (!bracketed) continue;  // wall beyond any visible range on this ray
    for (int it = 0; it < 80 && (hi - lo) > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? hi : lo) = mid;
    }
    const double rho = 0.5 * (lo + hi);
    const Vec3 p = q0 + rho * dir;
    const Vec3 rel = p - fov.origin;
    const double x = rel.dot(fov.lateral);
    const double z = rel.dot(fov.depth);
    if (fov.contains(x, z)) points.push_back(p);
  }

  return BoundaryCloud::from_points(std::move(points), timestamp_s, image_plane_pose,
                                    !points.empty());
}

BoundaryCloud corrupt_cloud(const BoundaryCloud& cloud, NoiseModel& noise,
                            const ImageCalibration& cal) {
  const FovFrame fov = make_fov(cloud.source_pose, cal);
  std::vector<Vec3> pts;
  pts.reserve(cloud.points_mm.size());
  for (const auto& p : cloud.points_mm) {
    Vec3 q = p;
    if (noise.boundary_jitter_sigma_mm > 0.0) {
      q += Vec3(noise.rng.normal(0.0, noise.boundary_jitter_sigma_mm),
                noise.rng.normal(0.0, noise.boundary_jitter_sigma_mm),
                noise.rng.normal(0.0, noise.boundary_jitter_sigma_mm));
    }
    if (noise.dropout_rate > 0.0 && noise.rng.bernoulli(noise.dropout_rate)) continue;
    if (noise.outlier_rate > 0.0 && noise.rng.bernoulli(noise.outlier_rate)) {
      const double x = noise.rng.uniform(fov.x_min, fov.x_max);
      const double z = noise.rng.uniform(fov.z_min, fov.z_max);
      q = fov.to_base(x, z);
    }
    pts.push_back(q);
  }
  return BoundaryCloud::from_points(std::move(pts), cloud.timestamp_s,
                                    cloud.source_pose, !pts.empty());
}

std::vector<BoundaryCloud> spawn_false_candidate(const BoundaryCloud& cloud,
                                                 NoiseModel& noise,
                                                 const ImageCalibration& cal,
                                                 double true_radius_mm) {
  std::vector<BoundaryCloud> out{cloud};
  if (noise.false_positive_rate <= 0.0) return out;
  if (!noise.rng.bernoulli(noise.false_positive_rate)) return out;
  if (cloud.empty()) return out;

  const FovFrame fov = make_fov(cloud.source_pose, cal);
  const Vec3 rel = cloud.centroid_mm - fov.origin;
  const double cu = rel.dot(fov.lateral);
  const double cv = rel.dot(fov.depth);

  for (int attempt = 0; attempt < 64; ++attempt) {
    const double x = noise.rng.uniform(fov.x_min, fov.x_max);
    const double z = noise.rng.uniform(fov.z_min, fov.z_max);
    if (std::hypot(x - cu, z - cv) < 2.0 * true_radius_mm) continue;

    const double a = noise.rng.uniform(0.4, 1.2) * true_radius_mm;
    const double b = noise.rng.uniform(0.4, 1.2) * true_radius_mm;
    const double tilt = noise.rng.uniform(0.0, M_PI);
    const int n = std::max<std::size_t>(16, cloud.size() / 2);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * M_PI * k / n;
      const double ex = a * std::cos(th), ez = b * std::sin(th);
      const double px = x + ex * std::cos(tilt) - ez * std::sin(tilt);
      const double pz = z + ex * std::sin(tilt) + ez * std::cos(tilt);
      if (fov.contains(px, pz)) pts.push_back(fov.to_base(px, pz));
    }
    if (pts.size() < 8) continue;
    out.push_back(BoundaryCloud::from_points(std::move(pts), cloud.timestamp_s,
                                             cloud.source_pose, true));
    break;
  }
  return out;
}

}  // namespace vscan
