#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vscan/config.hpp"
#include "vscan/trace.hpp"

namespace vscan {

/// What the loop knows at one instant, for metric computation.
struct StateSnapshot {
  Vec3 probe_y_elevational = Vec3::UnitY();  // probe body Y in {b}
  std::optional<Vec3> estimated_direction;   // n_v in {b}
  std::optional<double> estimated_radius_mm;
  std::optional<double> centroid_u_px;       // tracked vessel center, lateral pixels
};

struct GroundTruthSample {
  Vec3 centerline_dir = Vec3::UnitY();  // n_g at the current arclength
  double radius_mm = 0.0;
};

struct MetricsRow {
  double e_or_rea_deg = std::numeric_limits<double>::quiet_NaN();
  double e_or_com_deg = std::numeric_limits<double>::quiet_NaN();
  double e_ce_mm = std::numeric_limits<double>::quiet_NaN();
  double e_ra_mm = std::numeric_limits<double>::quiet_NaN();  // signed
};

/// e_or_rea = angle(n_g, Y_p), e_or_com = angle(n_g, n_v),
/// e_ce = |x_c - H/2| * (L_p / H), e_ra = r_est - r_true.
MetricsRow compute_metrics(const StateSnapshot& snapshot, const GroundTruthSample& gt,
                           const ImageCalibration& cal);

/// Extended trace with optional end-of-run buffer dumps (cfg.dump_ply).
struct ScreeningRun {
  ScreeningTrace trace;
  std::vector<Vec3> final_raw_points_mm;
  std::vector<Vec3> final_spread_points_mm;
};

/// Run the closed loop of acquire -> segment -> track -> buffer -> solve ->
/// command -> impedance step, on a virtual clock. Deterministic per config
/// (including seed). The probe holds still until the ring buffer is full.
ScreeningRun run_screening(const ScenarioConfig& cfg);

struct RunRecord {
  double offset_deg = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct OffsetAggregate {
  std::string offset_label;  // "0", "15", ... or "all"
  MetricStats e_or_rea;
  MetricStats e_or_com;
  MetricStats e_ce;
  MetricStats e_ra;
  double e_or_rea_median = std::numeric_limits<double>::quiet_NaN();
  double e_or_rea_max = std::numeric_limits<double>::quiet_NaN();
  double e_ce_median = std::numeric_limits<double>::quiet_NaN();
  double e_ce_max = std::numeric_limits<double>::quiet_NaN();
  double e_ra_median = std::numeric_limits<double>::quiet_NaN();
  double e_ra_max = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> t_or_median_s;
  std::optional<double> t_ce_median_s;
  std::optional<double> t_ra_median_s;
  int aborted = 0;
  int total = 0;
};

struct BatchResult {
  std::vector<RunRecord> runs;
  std::vector<OffsetAggregate> aggregates;  // one per offset plus a final "all"
  std::string to_csv() const;
};

/// offsets x repeats screening runs from one template; run seeds derive
/// deterministically from the template seed. Aborted runs are recorded,
/// counted and left out of the aggregates.
BatchResult batch_runs(const ScenarioConfig& base, const std::vector<double>& offsets_deg,
                       int repeats);

}  // namespace vscan
