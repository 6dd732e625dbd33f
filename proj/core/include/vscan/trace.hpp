#pragma once

#include <Eigen/Geometry>
#include <optional>
#include <string>
#include <vector>

#include "vscan/geometry.hpp"

namespace vscan {

/// One control-tick record of the screening loop.
struct TraceRow {
  double t_s = 0.0;
  Vec3 position_mm = Vec3::Zero();        // probe (imaging frame) origin in {b}
  Eigen::Quaterniond orientation{1, 0, 0, 0};
  Vec3 target_position_mm = Vec3::Zero();
  double contact_force_N = 0.0;
  int halted = 0;
  int buffer_full = 0;
  int has_estimate = 0;
  int degenerate = 0;
  int n_candidates = 0;
  double dice = std::numeric_limits<double>::quiet_NaN();
  double e_or_rea_deg = std::numeric_limits<double>::quiet_NaN();
  double e_or_com_deg = std::numeric_limits<double>::quiet_NaN();
  double e_ce_mm = std::numeric_limits<double>::quiet_NaN();
  double e_ra_mm = std::numeric_limits<double>::quiet_NaN();
  double radius_est_mm = std::numeric_limits<double>::quiet_NaN();
};

enum class RunStatus { Completed, LostTarget, ForceHalted };

std::string to_string(RunStatus s);

struct MetricStats {
  double mean_abs = std::numeric_limits<double>::quiet_NaN();
  double sd_abs = std::numeric_limits<double>::quiet_NaN();
  double mean_signed = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

/// Per-run outcome: convergence times and steady-window statistics.
struct RunSummary {
  RunStatus status = RunStatus::Completed;
  bool converged = false;  // all three times defined
  std::optional<double> t_or_s;
  std::optional<double> t_ce_s;
  std::optional<double> t_ra_s;
  double steady_start_s = 0.0;
  MetricStats e_or_rea;
  MetricStats e_or_com;
  MetricStats e_ce;
  MetricStats e_ra;
  double duration_s = 0.0;
  std::size_t rows = 0;
};

struct ScreeningTrace {
  std::vector<std::string> header;  // '#'-prefixed echo of the configuration
  std::vector<TraceRow> rows;
  RunSummary summary;
};

/// Earliest time t0 with err(t) < threshold for every sample in
/// [t0, t0 + hold_s]; nullopt when no such window exists. NaN samples never
/// satisfy the threshold.
std::optional<double> convergence_time(const std::vector<double>& t_s,
                                       const std::vector<double>& err,
                                       double threshold, double hold_s);

/// Fill summary.t_* and steady statistics from the rows.
RunSummary summarize(const std::vector<TraceRow>& rows, double or_thresh_deg,
                     double ce_thresh_mm, double ra_thresh_mm, double hold_s,
                     RunStatus status);

void write_trace_csv(const ScreeningTrace& trace, const std::string& path);

/// Parse a trace written by write_trace_csv (header lines preserved).
ScreeningTrace read_trace_csv(const std::string& path, double or_thresh_deg = 5.0,
                              double ce_thresh_mm = 0.5, double ra_thresh_mm = 1.0,
                              double hold_s = 1.0);

/// Consistent float formatting for byte-reproducible output.
std::string format_double(double v);

}  // namespace vscan
