#include "vscan/screening.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vscan/cloud_buffer.hpp"
#include "vscan/mask.hpp"
#include "vscan/phantom.hpp"
#include "vscan/probe_control.hpp"

namespace vscan {

namespace {

/// Probe body axes (Y elevational, Z out of the surface) vs imaging axes
/// (x lateral, z into the tissue): a 180-degree flip about x.
const Mat3 kFlipX = (Mat3() << 1, 0, 0, 0, -1, 0, 0, 0, -1).finished();

Mat3 body_from_imaging(const Mat3& r_img) { return r_img * kFlipX; }
Mat3 imaging_from_body(const Mat3& r_body) { return r_body * kFlipX; }

std::vector<Eigen::Vector2d> ring_pixels(const BoundaryCloud& cloud,
                                         const Pose& img_pose,
                                         const ImageCalibration& cal) {
  std::vector<Eigen::Vector2d> ring;
  ring.reserve(cloud.size());
  for (const auto& p : cloud.points_mm) ring.push_back(base_to_pixel(img_pose, cal, p));
  // Noise can scramble the vertex order; sort by angle about the centroid so
  // the polygon is star-shaped and the even-odd fill cannot shatter the blob.
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : ring) c += p;
  if (!ring.empty()) c /= static_cast<double>(ring.size());
  std::sort(ring.begin(), ring.end(),
            [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
              return std::atan2(a.y() - c.y(), a.x() - c.x()) <
                     std::atan2(b.y() - c.y(), b.x() - c.x());
            });
  return ring;
}

std::vector<std::string> make_header(const ScenarioConfig& c) {
  auto fd = [](double v) { return format_double(v); };
  std::vector<std::string> h;
  h.push_back("vesselscan trace v1");
  h.push_back("phantom: kind=" + c.phantom_kind + " radius_mm=" + fd(c.vessel_radius_mm) +
              " bump_amp_mm=" + fd(c.bump_amp_mm) + " surface_z_mm=" +
              fd(c.surface_height_mm));
  h.push_back("cal: L_p_mm=" + fd(c.calibration.probe_footprint_mm) +
              " D_I_mm=" + fd(c.calibration.imaging_depth_mm) +
              " H_px=" + std::to_string(c.calibration.lateral_px) +
              " W_px=" + std::to_string(c.calibration.axial_px) +
              " eps0_mm=" + fd(c.calibration.element_offset_mm));
  const auto& imp = c.impedance;
  h.push_back("impedance: K_m_trans_N_m=" + fd(imp.stiffness_trans_N_m.x()) + "," +
              fd(imp.stiffness_trans_N_m.y()) + "," + fd(imp.stiffness_trans_N_m.z()) +
              " K_m_rot_Nm_rad=" + fd(imp.stiffness_rot_Nm_rad.x()) + "," +
              fd(imp.stiffness_rot_Nm_rad.y()) + "," + fd(imp.stiffness_rot_Nm_rad.z()) +
              " damping_ratio=" + fd(imp.damping_ratio) + " mass_kg=" + fd(imp.mass_kg) +
              " inertia_kgm2=" + fd(imp.inertia_kgm2) +
              " F_d_N=" + fd(imp.desired_force_N.z()) +
              " force_limit_N=" + fd(imp.force_limit_N));
  h.push_back("control: dt_s=" + fd(c.dt_s) + " frame_every_ticks=" +
              std::to_string(c.frame_every_ticks) + " march_mm_s=" + fd(c.march_mm_s) +
              " initial_offset_deg=" + fd(c.initial_offset_deg) +
              " duration_s=" + fd(c.duration_s) + " seed=" + std::to_string(c.seed));
  h.push_back("buffer: capacity=" + std::to_string(c.buffer_capacity) +
              " mu=" + fd(c.spread_mu));
  const auto& o = c.optimizer;
  h.push_back("optimizer: r_l_mm=" + fd(o.radius_lower_mm) + " r_h_mm=" +
              fd(o.radius_upper_mm) + " lambda1=" + fd(o.lambda_orientation) +
              " lambda2=" + fd(o.lambda_radius) + " eps_min_mm=" + fd(o.eps_min_mm) +
              " rounds=" + std::to_string(o.tick_tock_rounds));
  h.push_back("noise: jitter_sigma_mm=" + fd(c.noise_jitter_sigma_mm) + " outlier_rate=" +
              fd(c.noise_outlier_rate) + " dropout_rate=" + fd(c.noise_dropout_rate) +
              " false_positive_rate=" + fd(c.noise_false_positive_rate));
  h.push_back("command blending: per-tick target = march (v*dt along target Y) "
              "+ lateral rebase to measured position + centering offset");
  return h;
}

/// Resample a traced boundary at uniform angles about the blob centroid.
/// Moore boundaries put more pixels on ragged arcs; index-striding them would
/// bias the cloud centroid by the local raggedness, and the buffer spreading
/// multiplies exactly that error.
std::vector<Eigen::Vector2d> resample_boundary(const std::vector<Eigen::Vector2i>& pts,
                                               const Eigen::Vector2d& centroid_px,
                                               std::size_t count) {
  std::vector<Eigen::Vector2d> out;
  if (pts.empty() || count == 0) return out;
  std::vector<std::pair<double, Eigen::Vector2d>> by_angle;
  by_angle.reserve(pts.size());
  for (const auto& p : pts) {
    const Eigen::Vector2d q(p.x() + 0.5, p.y() + 0.5);
    by_angle.emplace_back(std::atan2(q.y() - centroid_px.y(), q.x() - centroid_px.x()), q);
  }
  std::sort(by_angle.begin(), by_angle.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  out.reserve(count);
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double want = -M_PI + 2.0 * M_PI * (k + 0.5) / count;
    while (j + 1 < by_angle.size() && by_angle[j + 1].first < want) ++j;
    // nearest of the straddling pair
    const auto& a = by_angle[j];
    const auto& b = by_angle[(j + 1) % by_angle.size()];
    out.push_back(std::abs(a.first - want) <= std::abs(b.first - want) ? a.second
                                                                       : b.second);
  }
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
                          return a == b;
                        }),
            out.end());
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SampleBag {
  std::vector<double> e_or_rea, e_or_com, e_ce, e_ra_abs, e_ra_signed;
};

MetricStats stats_of(const std::vector<double>& abs_vals,
                     const std::vector<double>& signed_vals) {
  MetricStats s;
  if (abs_vals.empty()) return s;
  double sum = 0.0, sum2 = 0.0;
  for (double v : abs_vals) {
    sum += v;
    sum2 += v * v;
  }
  s.count = abs_vals.size();
  s.mean_abs = sum / static_cast<double>(s.count);
  s.sd_abs = std::sqrt(std::max(0.0, sum2 / static_cast<double>(s.count) -
                                         s.mean_abs * s.mean_abs));
  if (!signed_vals.empty()) {
    double ss = 0.0;
    for (double v : signed_vals) ss += v;
    s.mean_signed = ss / static_cast<double>(signed_vals.size());
  }
  return s;
}

}  // namespace

MetricsRow compute_metrics(const StateSnapshot& snapshot, const GroundTruthSample& gt,
                           const ImageCalibration& cal) {
  MetricsRow m;
  m.e_or_rea_deg = line_angle_deg(gt.centerline_dir, snapshot.probe_y_elevational);
  if (snapshot.estimated_direction)
    m.e_or_com_deg = line_angle_deg(gt.centerline_dir, *snapshot.estimated_direction);
  if (snapshot.centroid_u_px) {
    const double du = *snapshot.centroid_u_px - static_cast<double>(cal.lateral_px) / 2.0;
    m.e_ce_mm = std::abs(du) * cal.lateral_scale_mm_per_px();
  }
  if (snapshot.estimated_radius_mm) m.e_ra_mm = *snapshot.estimated_radius_mm - gt.radius_mm;
  return m;
}

ScreeningRun run_screening(const ScenarioConfig& cfg) {
  cfg.validate();
  const TubePhantom phantom = cfg.make_phantom();
  const ImageCalibration& cal = cfg.calibration;
  NoiseModel noise(cfg.noise_jitter_sigma_mm, cfg.noise_outlier_rate,
                   cfg.noise_dropout_rate, cfg.noise_false_positive_rate, cfg.seed);
  CloudRingBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity), cfg.spread_mu);
  const SurfaceContact contact{phantom.surface_point_mm(), phantom.surface_normal(),
                               cfg.contact_stiffness_N_m};
  SafetyGate gate(cfg.impedance.force_limit_N);

  // Initial placement: probe tip on the skin directly above the vessel at the
  // requested arclength, pressed flat (body Z along the outward normal), with
  // the elevational axis yawed initial_offset_deg away from the centerline.
  const Vec3 n_out = phantom.surface_normal();
  const Vec3 hub = phantom.point_at(cfg.start_arclength_mm);
  const Vec3 tangent0 = phantom.tangent_at(cfg.start_arclength_mm);
  const Vec3 tang_surf = (tangent0 - tangent0.dot(n_out) * n_out).normalized();
  const Vec3 y_body0 =
      Eigen::AngleAxisd(cfg.initial_offset_deg * M_PI / 180.0, n_out) * tang_surf;
  const Mat3 r_body0 = target_orientation(y_body0, n_out);
  const Vec3 origin0 = hub + (contact.plane_point_mm - hub).dot(n_out) * n_out;
  const Pose img0 = Pose::from_rt(imaging_from_body(r_body0), origin0);
  const Pose mount_inv = cfg.mount_fp.inverse();

  PlantState plant;
  plant.pose = img0.compose(mount_inv);  // plant integrates the flange frame

  Pose target_img = img0;
  Vec3 march_y = r_body0.col(1);
  std::optional<CenterlineEstimate> estimate;
  std::optional<Eigen::Vector2d> prev_centroid;
  int gated_streak = 0;
  int shape_streak = 0;
  Vec3 cur_dp = Vec3::Zero();
  int lost_frames = 0;
  const int max_lost_frames = std::max(
      1, static_cast<int>(std::ceil(cfg.lost_target_timeout_s /
                                    (cfg.dt_s * cfg.frame_every_ticks))));
  bool halted = false;
  RunStatus status = RunStatus::Completed;

  // Latest frame-derived values, reused for rows between frames.
  double cur_dice = std::numeric_limits<double>::quiet_NaN();
  int cur_ncand = 0;
  std::optional<double> cur_u;
  GroundTruthSample gt{tangent0, phantom.radius_at(cfg.start_arclength_mm)};

  ScreeningRun out;
  out.trace.header = make_header(cfg);
  const int total_ticks = static_cast<int>(std::llround(cfg.duration_s / cfg.dt_s));
  out.trace.rows.reserve(static_cast<std::size_t>(total_ticks));

  for (int k = 0; k < total_ticks; ++k) {
    const double t = k * cfg.dt_s;
    const Pose img_pose = plant.pose.compose(cfg.mount_fp);

    if (k % cfg.frame_every_ticks == 0 && !halted) {
      // --- acquire and segment (synthetic) ---
      const BoundaryCloud truth = slice_tube(phantom, img_pose, cal, cfg.frame_points, t);
      if (const auto hit = phantom.plane_hit(img_pose.translation_mm,
                                             img_pose.rotation.col(1))) {
        gt.centerline_dir = phantom.tangent_at(hit->arclength_mm);
        gt.radius_mm = phantom.radius_at(hit->arclength_mm);
      }

      std::vector<std::vector<Eigen::Vector2d>> gt_rings, noisy_rings;
      if (!truth.empty()) gt_rings.push_back(ring_pixels(truth, img_pose, cal));
      const BoundaryCloud noisy = corrupt_cloud(truth, noise, cal);
      const auto candidate_clouds = spawn_false_candidate(noisy, noise, cal, gt.radius_mm);
      for (const auto& cc : candidate_clouds)
        if (!cc.empty()) noisy_rings.push_back(ring_pixels(cc, img_pose, cal));

      const BinaryMask g_mask =
          rasterize_polygons(gt_rings, cal.lateral_px, cal.axial_px);
      // A trained segmenter emits compact blobs; opening strips the pixel-wide
      // spikes that corrupted boundary vertices would otherwise rasterize to.
      const BinaryMask s_mask = morphological_open(
          rasterize_polygons(noisy_rings, cal.lateral_px, cal.axial_px));
      cur_dice = dice(g_mask, s_mask);

      const auto candidates = extract_candidates(s_mask, cfg.min_area_px2);
      cur_ncand = static_cast<int>(candidates.size());
      auto selected = track_nearest(prev_centroid, candidates);

      // The vessel is continuous: a centroid jump beyond the gate within one
      // frame period is a segmentation failure, not motion. Skip the frame
      // rather than poison the buffer. If gating persists the anchor itself
      // is stale (or was captured by a false positive), so re-acquire.
      if (selected && prev_centroid &&
          (selected->centroid_px - *prev_centroid).norm() *
                  cal.lateral_scale_mm_per_px() >
              cfg.track_gate_mm) {
        selected.reset();
        if (++gated_streak > 10) {
          prev_centroid.reset();
          gated_streak = 0;
        }
      } else {
        gated_streak = 0;
      }

      if (selected) {
        prev_centroid = selected->centroid_px;
        cur_u = selected->centroid_px.x();
        lost_frames = 0;
        const auto boundary =
            resample_boundary(selected->boundary_px, selected->centroid_px,
                              static_cast<std::size_t>(cfg.max_points_per_frame));
        std::vector<Vec3> pts;
        pts.reserve(boundary.size());
        for (const auto& px : boundary) {
          if (px.x() < 0.0 || px.x() > cal.lateral_px || px.y() < 0.0 ||
              px.y() > cal.axial_px)
            continue;
          pts.push_back(image_to_base(plant.pose, cfg.mount_fp, cal, px.x(), px.y()));
        }
        if (!pts.empty()) {
          BoundaryCloud cloud = BoundaryCloud::from_points(std::move(pts), t, img_pose);
          // Radius continuity: a detected ring whose apparent radius departs
          // wildly from the running estimate is another segmentation failure
          // mode. A poisoned cloud stays in the buffer for N_R frames, so it
          // is cheaper to skip it here. Accept after a long streak anyway in
          // case the estimate itself is the stale side.
          bool plausible = true;
          if (estimate && !estimate->degenerate) {
            double ring_r = 0.0;
            for (const auto& p : cloud.points_mm)
              ring_r += (p - cloud.centroid_mm).norm();
            ring_r /= static_cast<double>(cloud.size());
            const double limit = std::max(2.0, 0.4 * estimate->radius_mm);
            plausible = std::abs(ring_r - estimate->radius_mm) <= limit;
          }
          if (plausible || ++shape_streak > 10) {
            buffer.push(cloud);
            shape_streak = 0;
          }
        }
      } else {
        ++lost_frames;
        cur_u.reset();
        if (lost_frames > max_lost_frames) {
          status = RunStatus::LostTarget;
          break;
        }
      }

      // --- estimate ---
      if (buffer.is_full()) {
        const auto spread = buffer.spread_view();
        const auto raw = buffer.raw_view();
        if (!estimate) {
          // Bootstrap: wait for genuine probe travel before the cold solve,
          // otherwise an overlapped buffer yields a radial-direction artifact.
          // Small buffers can never span the configured distance, so cap the
          // gate at most of their best-case trail.
          const double max_span = (cfg.buffer_capacity - 1) * cfg.march_mm_s *
                                  cfg.dt_s * cfg.frame_every_ticks;
          const double span_gate = std::min(cfg.bootstrap_span_mm, 0.8 * max_span);
          if (buffer.centroid_span_mm() >= span_gate && !cloud_is_planar(spread)) {
            const Vec3 cold_axis = body_from_imaging(img_pose.rotation).col(1);
            try {
              estimate = tick_tock_step(spread, raw, std::nullopt, cfg.optimizer,
                                        cold_axis);
            } catch (const ColdStartError&) {
            } catch (const InsufficientDataError&) {
            }
          }
        } else {
          try {
            for (int r = 0; r < cfg.optimizer.tick_tock_rounds; ++r)
              estimate = tick_tock_step(spread, raw, estimate, cfg.optimizer);
          } catch (const InsufficientDataError&) {
          }
        }
      }

      // --- command rebuild (only once the buffer is full) ---
      if (buffer.is_full()) {
        if (estimate && !estimate->degenerate) {
          try {
            const Mat3 r_body_t =
                target_orientation(estimate->direction_in_base(), n_out, march_y);
            march_y = r_body_t.col(1);
            target_img.rotation = imaging_from_body(r_body_t);
          } catch (const DegenerateGeometryError&) {
            // hold the previous orientation target
          }
        }
        if (cur_u) {
          // dP points from the vessel's apparent position toward the image
          // center; the probe counter-moves by -dP to carry the vessel there.
          // The lateral target is rebased absolutely each frame so the
          // correction never integrates into a windup.
          cur_dp = centering_offset(*cur_u, cal, img_pose);
          const Vec3 lat_axis = img_pose.rotation.col(0);
          const double want = lat_axis.dot(img_pose.translation_mm - cur_dp);
          const double have = lat_axis.dot(target_img.translation_mm);
          target_img.translation_mm += (want - have) * lat_axis;
        }
      }
    }

    // --- march and integrate ---
    if (buffer.is_full() && !halted)
      target_img.translation_mm += cfg.march_mm_s * cfg.dt_s * march_y;

    ProbeCommand cmd;
    cmd.target_pose = target_img.compose(mount_inv);
    cmd.march_velocity_mm_s = buffer.is_full() ? cfg.march_mm_s : 0.0;
    cmd.centering_offset_mm = cur_dp;
    const auto step = step_impedance(plant, cmd, cfg.impedance, contact, cfg.dt_s);
    if (!gate.check(step.contact_magnitude_N) && !halted) {
      halted = true;
      status = RunStatus::ForceHalted;
      plant.lin_vel_mm_s = Vec3::Zero();
      plant.ang_vel_rad_s = Vec3::Zero();
    }
    if (!halted) plant = step.next;

    // --- metrics row ---
    const Pose img_now = plant.pose.compose(cfg.mount_fp);
    StateSnapshot snap;
    snap.probe_y_elevational = body_from_imaging(img_now.rotation).col(1);
    if (estimate) {
      snap.estimated_direction = estimate->direction_in_base();
      snap.estimated_radius_mm = estimate->radius_mm;
    }
    snap.centroid_u_px = cur_u;
    const MetricsRow m = compute_metrics(snap, gt, cal);

    TraceRow row;
    row.t_s = t;
    row.position_mm = img_now.translation_mm;
    row.orientation = Eigen::Quaterniond(img_now.rotation);
    row.target_position_mm = target_img.translation_mm;
    row.contact_force_N = step.contact_magnitude_N;
    row.halted = halted ? 1 : 0;
    row.buffer_full = buffer.is_full() ? 1 : 0;
    row.has_estimate = estimate ? 1 : 0;
    row.degenerate = (estimate && estimate->degenerate) ? 1 : 0;
    row.n_candidates = cur_ncand;
    row.dice = cur_dice;
    row.e_or_rea_deg = m.e_or_rea_deg;
    row.e_or_com_deg = m.e_or_com_deg;
    row.e_ce_mm = m.e_ce_mm;
    row.e_ra_mm = m.e_ra_mm;
    if (estimate) row.radius_est_mm = estimate->radius_mm;
    out.trace.rows.push_back(row);
  }

  out.trace.summary = summarize(out.trace.rows, cfg.or_thresh_deg, cfg.ce_thresh_mm,
                                cfg.ra_thresh_mm, cfg.hold_s, status);
  if (cfg.dump_ply && buffer.size() > 0) {
    out.final_raw_points_mm = buffer.raw_view();
    out.final_spread_points_mm = buffer.spread_view();
  }
  return out;
}

BatchResult batch_runs(const ScenarioConfig& base, const std::vector<double>& offsets_deg,
                       int repeats) {
  if (repeats < 1) throw DomainError("batch_runs: repeats must be >= 1");
  BatchResult result;
  std::vector<SampleBag> bags(offsets_deg.size() + 1);  // + pooled "all"
  std::vector<std::vector<double>> t_or(offsets_deg.size() + 1),
      t_ce(offsets_deg.size() + 1), t_ra(offsets_deg.size() + 1);
  std::vector<int> aborted(offsets_deg.size() + 1, 0), total(offsets_deg.size() + 1, 0);

  int run_index = 0;
  for (std::size_t oi = 0; oi < offsets_deg.size(); ++oi) {
    for (int rep = 0; rep < repeats; ++rep, ++run_index) {
      ScenarioConfig cfg = base;
      cfg.initial_offset_deg = offsets_deg[oi];
      cfg.seed = base.seed + static_cast<std::uint64_t>(run_index + 1) * 101;
      const ScreeningRun run = run_screening(cfg);
      RunRecord rec{offsets_deg[oi], rep, cfg.seed, run.trace.summary};
      result.runs.push_back(rec);

      for (std::size_t bi : {oi, offsets_deg.size()}) {
        ++total[bi];
        if (rec.summary.status != RunStatus::Completed) {
          ++aborted[bi];
          continue;
        }
        // Pool steady-window samples for the aggregate block.
        for (const auto& r : run.trace.rows) {
          if (r.t_s < rec.summary.steady_start_s) continue;
          if (!std::isnan(r.e_or_rea_deg))
            bags[bi].e_or_rea.push_back(std::abs(r.e_or_rea_deg));
          if (!std::isnan(r.e_or_com_deg))
            bags[bi].e_or_com.push_back(std::abs(r.e_or_com_deg));
          if (!std::isnan(r.e_ce_mm)) bags[bi].e_ce.push_back(std::abs(r.e_ce_mm));
          if (!std::isnan(r.e_ra_mm)) {
            bags[bi].e_ra_abs.push_back(std::abs(r.e_ra_mm));
            bags[bi].e_ra_signed.push_back(r.e_ra_mm);
          }
        }
        if (rec.summary.t_or_s) t_or[bi].push_back(*rec.summary.t_or_s);
        if (rec.summary.t_ce_s) t_ce[bi].push_back(*rec.summary.t_ce_s);
        if (rec.summary.t_ra_s) t_ra[bi].push_back(*rec.summary.t_ra_s);
      }
    }
  }

  for (std::size_t bi = 0; bi <= offsets_deg.size(); ++bi) {
    OffsetAggregate agg;
    agg.offset_label =
        bi < offsets_deg.size() ? format_double(offsets_deg[bi]) : std::string("all");
    agg.e_or_rea = stats_of(bags[bi].e_or_rea, {});
    agg.e_or_com = stats_of(bags[bi].e_or_com, {});
    agg.e_ce = stats_of(bags[bi].e_ce, {});
    agg.e_ra = stats_of(bags[bi].e_ra_abs, bags[bi].e_ra_signed);
    auto max_of = [](const std::vector<double>& v) {
      return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : *std::max_element(v.begin(), v.end());
    };
    agg.e_or_rea_median = median_of(bags[bi].e_or_rea);
    agg.e_or_rea_max = max_of(bags[bi].e_or_rea);
    agg.e_ce_median = median_of(bags[bi].e_ce);
    agg.e_ce_max = max_of(bags[bi].e_ce);
    agg.e_ra_median = median_of(bags[bi].e_ra_abs);
    agg.e_ra_max = max_of(bags[bi].e_ra_abs);
    if (!t_or[bi].empty()) agg.t_or_median_s = median_of(t_or[bi]);
    if (!t_ce[bi].empty()) agg.t_ce_median_s = median_of(t_ce[bi]);
    if (!t_ra[bi].empty()) agg.t_ra_median_s = median_of(t_ra[bi]);
    agg.aborted = aborted[bi];
    agg.total = total[bi];
    result.aggregates.push_back(agg);
  }
  return result;
}

std::string BatchResult::to_csv() const {
  std::ostringstream s;
  auto opt_fd = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("nan");
  };
  s << "row,offset_deg,repeat,seed,status,converged,t_or_s,t_ce_s,t_ra_s,"
       "e_or_rea_mean,e_or_rea_sd,e_or_com_mean,e_or_com_sd,e_ce_mean,e_ce_sd,"
       "e_ra_mean_abs,e_ra_sd,e_ra_mean_signed,steady_start_s,rows\n";
  for (const auto& r : runs) {
    s << "run," << format_double(r.offset_deg) << ',' << r.repeat << ',' << r.seed << ','
      << to_string(r.summary.status) << ',' << (r.summary.converged ? 1 : 0) << ','
      << opt_fd(r.summary.t_or_s) << ',' << opt_fd(r.summary.t_ce_s) << ','
      << opt_fd(r.summary.t_ra_s) << ',' << format_double(r.summary.e_or_rea.mean_abs)
      << ',' << format_double(r.summary.e_or_rea.sd_abs) << ','
      << format_double(r.summary.e_or_com.mean_abs) << ','
      << format_double(r.summary.e_or_com.sd_abs) << ','
      << format_double(r.summary.e_ce.mean_abs) << ','
      << format_double(r.summary.e_ce.sd_abs) << ','
      << format_double(r.summary.e_ra.mean_abs) << ','
      << format_double(r.summary.e_ra.sd_abs) << ','
      << format_double(r.summary.e_ra.mean_signed) << ','
      << format_double(r.summary.steady_start_s) << ',' << r.summary.rows << "\n";
  }
  s << "agg,offset,metric,count,mean_abs,sd_abs,median_abs,max_abs\n";
  for (const auto& a : aggregates) {
    auto line = [&](const char* metric, const MetricStats& st, double med, double mx) {
      s << "agg," << a.offset_label << ',' << metric << ',' << st.count << ','
        << format_double(st.mean_abs) << ',' << format_double(st.sd_abs) << ','
        << format_double(med) << ',' << format_double(mx) << "\n";
    };
    line("e_or_rea_deg", a.e_or_rea, a.e_or_rea_median, a.e_or_rea_max);
    line("e_or_com_deg", a.e_or_com,
         std::numeric_limits<double>::quiet_NaN(),
         std::numeric_limits<double>::quiet_NaN());
    line("e_ce_mm", a.e_ce, a.e_ce_median, a.e_ce_max);
    line("e_ra_mm", a.e_ra, a.e_ra_median, a.e_ra_max);
    s << "agg_t," << a.offset_label << ',' << opt_fd(a.t_or_median_s) << ','
      << opt_fd(a.t_ce_median_s) << ',' << opt_fd(a.t_ra_median_s) << ',' << a.aborted
      << ',' << a.total << "\n";
  }
  return s.str();
}

}  // namespace vscan
