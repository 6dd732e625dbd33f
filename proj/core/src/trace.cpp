#include "vscan/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vscan/errors.hpp"

namespace vscan {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::LostTarget: return "lost_target";
    case RunStatus::ForceHalted: return "force_halted";
  }
  return "unknown";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::optional<double> convergence_time(const std::vector<double>& t_s,
                                       const std::vector<double>& err,
                                       double threshold, double hold_s) {
  const std::size_t n = t_s.size();
  if (n == 0 || err.size() != n) return std::nullopt;
  // Two-pointer sweep: for each candidate start, check the hold window.
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(err[i] < threshold)) continue;  // NaN fails here too
    if (j < i) j = i;
    while (j + 1 < n && t_s[j] - t_s[i] < hold_s && err[j + 1] < threshold) ++j;
    if (t_s[j] - t_s[i] >= hold_s) {
      // verify everything in [i, j] is below threshold
      bool ok = true;
      for (std::size_t k = i; k <= j; ++k)
        if (!(err[k] < threshold)) {
          ok = false;
          break;
        }
      if (ok) return t_s[i];
    }
  }
  return std::nullopt;
}

namespace {

MetricStats stats_over(const std::vector<TraceRow>& rows, double start_s,
                       double TraceRow::*field) {
  MetricStats s;
  double sum = 0.0, sum2 = 0.0, sum_signed = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.t_s < start_s) continue;
    const double v = r.*field;
    if (std::isnan(v)) continue;
    const double a = std::abs(v);
    sum += a;
    sum2 += a * a;
    sum_signed += v;
    ++n;
  }
  if (n == 0) return s;
  s.count = n;
  s.mean_abs = sum / static_cast<double>(n);
  s.mean_signed = sum_signed / static_cast<double>(n);
  const double var = sum2 / static_cast<double>(n) - s.mean_abs * s.mean_abs;
  s.sd_abs = std::sqrt(std::max(0.0, var));
  return s;
}

}  // namespace

RunSummary summarize(const std::vector<TraceRow>& rows, double or_thresh_deg,
                     double ce_thresh_mm, double ra_thresh_mm, double hold_s,
                     RunStatus status) {
  RunSummary s;
  s.status = status;
  s.rows = rows.size();
  if (rows.empty()) return s;
  s.duration_s = rows.back().t_s;

  std::vector<double> t, e_or, e_ce, e_ra;
  t.reserve(rows.size());
  for (const auto& r : rows) {
    t.push_back(r.t_s);
    e_or.push_back(r.e_or_rea_deg);
    e_ce.push_back(r.e_ce_mm);
    e_ra.push_back(std::abs(r.e_ra_mm));
  }
  s.t_or_s = convergence_time(t, e_or, or_thresh_deg, hold_s);
  s.t_ce_s = convergence_time(t, e_ce, ce_thresh_mm, hold_s);
  s.t_ra_s = convergence_time(t, e_ra, ra_thresh_mm, hold_s);
  s.converged = s.t_or_s && s.t_ce_s && s.t_ra_s;

  // Steady window per protocol: from the last convergence time to the end.
  // A run that never converged is summarized over its final second, flagged
  // by converged=false.
  if (s.converged) {
    s.steady_start_s = std::max({*s.t_or_s, *s.t_ce_s, *s.t_ra_s});
  } else {
    s.steady_start_s = std::max(0.0, s.duration_s - 1.0);
  }
  s.e_or_rea = stats_over(rows, s.steady_start_s, &TraceRow::e_or_rea_deg);
  s.e_or_com = stats_over(rows, s.steady_start_s, &TraceRow::e_or_com_deg);
  s.e_ce = stats_over(rows, s.steady_start_s, &TraceRow::e_ce_mm);
  s.e_ra = stats_over(rows, s.steady_start_s, &TraceRow::e_ra_mm);
  return s;
}

namespace {

constexpr const char* kColumns =
    "t_s,px_mm,py_mm,pz_mm,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm,contact_N,halted,"
    "buffer_full,has_estimate,degenerate,n_candidates,dice,e_or_rea_deg,"
    "e_or_com_deg,e_ce_mm,e_ra_mm,radius_est_mm";

}  // namespace

void write_trace_csv(const ScreeningTrace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("write_trace_csv: cannot open " + path);
  for (const auto& h : trace.header) f << "# " << h << "\n";
  f << kColumns << "\n";
  for (const auto& r : trace.rows) {
    f << format_double(r.t_s) << ',' << format_double(r.position_mm.x()) << ','
      << format_double(r.position_mm.y()) << ',' << format_double(r.position_mm.z())
      << ',' << format_double(r.orientation.w()) << ',' << format_double(r.orientation.x())
      << ',' << format_double(r.orientation.y()) << ',' << format_double(r.orientation.z())
      << ',' << format_double(r.target_position_mm.x()) << ','
      << format_double(r.target_position_mm.y()) << ','
      << format_double(r.target_position_mm.z()) << ','
      << format_double(r.contact_force_N) << ',' << r.halted << ',' << r.buffer_full
      << ',' << r.has_estimate << ',' << r.degenerate << ',' << r.n_candidates << ','
      << format_double(r.dice) << ',' << format_double(r.e_or_rea_deg) << ','
      << format_double(r.e_or_com_deg) << ',' << format_double(r.e_ce_mm) << ','
      << format_double(r.e_ra_mm) << ',' << format_double(r.radius_est_mm) << "\n";
  }
}

ScreeningTrace read_trace_csv(const std::string& path, double or_thresh_deg,
                              double ce_thresh_mm, double ra_thresh_mm, double hold_s) {
  std::ifstream f(path);
  if (!f) throw DomainError("read_trace_csv: cannot open " + path);
  ScreeningTrace trace;
  std::string line;
  bool saw_columns = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      trace.header.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    if (!saw_columns) {
      saw_columns = true;  // column header line
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::strtod(cell.c_str(), nullptr));
    if (v.size() != 23)
      throw DomainError("read_trace_csv: malformed row in " + path);
    TraceRow r;
    r.t_s = v[0];
    r.position_mm = {v[1], v[2], v[3]};
    r.orientation = Eigen::Quaterniond(v[4], v[5], v[6], v[7]);
    r.target_position_mm = {v[8], v[9], v[10]};
    r.contact_force_N = v[11];
    r.halted = static_cast<int>(v[12]);
    r.buffer_full = static_cast<int>(v[13]);
    r.has_estimate = static_cast<int>(v[14]);
    r.degenerate = static_cast<int>(v[15]);
    r.n_candidates = static_cast<int>(v[16]);
    r.dice = v[17];
    r.e_or_rea_deg = v[18];
    r.e_or_com_deg = v[19];
    r.e_ce_mm = v[20];
    r.e_ra_mm = v[21];
    r.radius_est_mm = v[22];
    trace.rows.push_back(r);
  }
  trace.summary = summarize(trace.rows, or_thresh_deg, ce_thresh_mm, ra_thresh_mm,
                            hold_s, RunStatus::Completed);
  return trace;
}

}  // namespace vscan
