#include "vscan/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace vscan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + text + "'");
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    kv.values_[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return from_string(buf.str());
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return parse_double(key, it->second);
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  if (v != std::floor(v))
    throw ConfigError("config: key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key,
                                      std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (...) {
    throw ConfigError("config: key '" + key + "' must be an unsigned integer");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' must be boolean (0/1/true/false)");
}

Vec3 KeyValueConfig::get_vec3(const std::string& key, const Vec3& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::istringstream in(it->second);
  double x, y, z;
  if (!(in >> x >> y >> z))
    throw ConfigError("config: key '" + key + "' must hold three numbers");
  return {x, y, z};
}

std::vector<Vec3> KeyValueConfig::get_points(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return {};
  std::vector<Vec3> pts;
  std::stringstream in(it->second);
  std::string chunk;
  while (std::getline(in, chunk, ';')) {
    chunk = trim(chunk);
    if (chunk.empty()) continue;
    std::stringstream cs(chunk);
    std::string num;
    double xyz[3];
    int i = 0;
    while (std::getline(cs, num, ',') && i < 3)
      xyz[i++] = parse_double(key, trim(num));
    if (i != 3)
      throw ConfigError("config: key '" + key + "': point '" + chunk +
                        "' is not x,y,z");
    pts.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  return pts;
}

ImageCalibration load_image_calibration(const KeyValueConfig& kv) {
  ImageCalibration cal;
  cal.probe_footprint_mm = kv.get_double("L_p_mm", cal.probe_footprint_mm);
  cal.imaging_depth_mm = kv.get_double("D_I_mm", cal.imaging_depth_mm);
  cal.lateral_px = kv.get_int("H_px", cal.lateral_px);
  cal.axial_px = kv.get_int("W_px", cal.axial_px);
  cal.element_offset_mm = kv.get_double("eps0_mm", cal.element_offset_mm);
  cal.validate();
  return cal;
}

ImageCalibration load_image_calibration_file(const std::string& path) {
  return load_image_calibration(KeyValueConfig::from_file(path));
}

Pose load_mount(const KeyValueConfig& kv) {
  Pose mount;
  if (kv.get_bool("mount_flip_z", false)) {
    mount.rotation << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  }
  mount.translation_mm = kv.get_vec3("mount_offset_mm", Vec3::Zero());
  return mount;
}

ScenarioConfig ScenarioConfig::from_config(const KeyValueConfig& kv) {
  ScenarioConfig c;
  c.phantom_kind = kv.get_string("phantom.kind", c.phantom_kind);
  c.phantom_origin_mm = kv.get_vec3("phantom.origin_mm", c.phantom_origin_mm);
  c.phantom_direction = kv.get_vec3("phantom.direction", c.phantom_direction);
  c.phantom_length_mm = kv.get_double("phantom.length_mm", c.phantom_length_mm);
  c.phantom_points_mm = kv.get_points("phantom.points_mm");
  c.helix_radius_mm = kv.get_double("phantom.helix_radius_mm", c.helix_radius_mm);
  c.helix_pitch_mm = kv.get_double("phantom.helix_pitch_mm", c.helix_pitch_mm);
  c.helix_turns = kv.get_double("phantom.helix_turns", c.helix_turns);
  c.vessel_radius_mm = kv.get_double("phantom.radius_mm", c.vessel_radius_mm);
  c.bump_amp_mm = kv.get_double("phantom.bump_amp_mm", c.bump_amp_mm);
  c.bump_center_mm = kv.get_double("phantom.bump_center_mm", c.bump_center_mm);
  c.bump_sigma_mm = kv.get_double("phantom.bump_sigma_mm", c.bump_sigma_mm);
  c.surface_height_mm = kv.get_double("surface.height_mm", c.surface_height_mm);

  c.calibration = load_image_calibration(kv);
  c.mount_fp = load_mount(kv);
  c.frame_points = kv.get_int("frame_points", c.frame_points);
  c.max_points_per_frame = kv.get_int("max_points_per_frame", c.max_points_per_frame);
  c.min_area_px2 = kv.get_double("min_area_px2", c.min_area_px2);
  c.track_gate_mm = kv.get_double("track_gate_mm", c.track_gate_mm);

  c.noise_jitter_sigma_mm = kv.get_double("noise.jitter_sigma_mm", c.noise_jitter_sigma_mm);
  c.noise_outlier_rate = kv.get_double("noise.outlier_rate", c.noise_outlier_rate);
  c.noise_dropout_rate = kv.get_double("noise.dropout_rate", c.noise_dropout_rate);
  c.noise_false_positive_rate =
      kv.get_double("noise.false_positive_rate", c.noise_false_positive_rate);

  c.buffer_capacity = kv.get_int("buffer.capacity", c.buffer_capacity);
  c.spread_mu = kv.get_double("buffer.mu", c.spread_mu);

  c.optimizer.radius_lower_mm = kv.get_double("opt.r_l_mm", c.optimizer.radius_lower_mm);
  c.optimizer.radius_upper_mm = kv.get_double("opt.r_h_mm", c.optimizer.radius_upper_mm);
  c.optimizer.lambda_orientation = kv.get_double("opt.lambda1", c.optimizer.lambda_orientation);
  c.optimizer.lambda_radius = kv.get_double("opt.lambda2", c.optimizer.lambda_radius);
  c.optimizer.eps_min_mm = kv.get_double("opt.eps_min_mm", c.optimizer.eps_min_mm);
  c.optimizer.tick_tock_rounds = kv.get_int("opt.rounds", c.optimizer.tick_tock_rounds);
  c.optimizer.inner_max_iters = kv.get_int("opt.inner_max_iters", c.optimizer.inner_max_iters);
  c.optimizer.convergence_tol_mm2 =
      kv.get_double("opt.convergence_tol_mm2", c.optimizer.convergence_tol_mm2);
  c.optimizer.reanchor_threshold =
      kv.get_double("opt.reanchor_threshold", c.optimizer.reanchor_threshold);

  c.dt_s = kv.get_double("control.dt_s", c.dt_s);
  c.frame_every_ticks = kv.get_int("control.frame_every_ticks", c.frame_every_ticks);
  c.march_mm_s = kv.get_double("control.march_mm_s", c.march_mm_s);
  c.initial_offset_deg = kv.get_double("control.initial_offset_deg", c.initial_offset_deg);
  c.duration_s = kv.get_double("control.duration_s", c.duration_s);
  c.start_arclength_mm = kv.get_double("control.start_arclength_mm", c.start_arclength_mm);
  c.bootstrap_span_mm = kv.get_double("control.bootstrap_span_mm", c.bootstrap_span_mm);

  c.impedance.stiffness_trans_N_m =
      kv.get_vec3("imp.k_trans_N_m", c.impedance.stiffness_trans_N_m);
  c.impedance.stiffness_rot_Nm_rad =
      kv.get_vec3("imp.k_rot_Nm_rad", c.impedance.stiffness_rot_Nm_rad);
  c.impedance.damping_ratio = kv.get_double("imp.damping_ratio", c.impedance.damping_ratio);
  c.impedance.mass_kg = kv.get_double("imp.mass_kg", c.impedance.mass_kg);
  c.impedance.inertia_kgm2 = kv.get_double("imp.inertia_kgm2", c.impedance.inertia_kgm2);
  const double fd = kv.get_double("control.desired_force_N", 5.0);
  c.impedance.desired_force_N = Vec3(0.0, 0.0, fd);  // presses along image depth
  c.impedance.force_limit_N = kv.get_double("control.force_limit_N", 25.0);
  c.contact_stiffness_N_m =
      kv.get_double("control.contact_stiffness_N_m", c.contact_stiffness_N_m);

  c.or_thresh_deg = kv.get_double("metrics.or_thresh_deg", c.or_thresh_deg);
  c.ce_thresh_mm = kv.get_double("metrics.ce_thresh_mm", c.ce_thresh_mm);
  c.ra_thresh_mm = kv.get_double("metrics.ra_thresh_mm", c.ra_thresh_mm);
  c.hold_s = kv.get_double("metrics.hold_s", c.hold_s);
  c.lost_target_timeout_s =
      kv.get_double("metrics.lost_timeout_s", c.lost_target_timeout_s);

  c.seed = kv.get_u64("seed", c.seed);
  c.dump_ply = kv.get_bool("out.ply", c.dump_ply);
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  return from_config(KeyValueConfig::from_file(path));
}

TubePhantom ScenarioConfig::make_phantom() const {
  TubePhantom phantom = [&] {
    if (phantom_kind == "straight")
      return TubePhantom::straight(phantom_origin_mm, phantom_direction,
                                   phantom_length_mm, vessel_radius_mm);
    if (phantom_kind == "polyline")
      return TubePhantom::polyline(phantom_points_mm, vessel_radius_mm);
    if (phantom_kind == "helix")
      return TubePhantom::helix(phantom_origin_mm, phantom_direction, helix_radius_mm,
                                helix_pitch_mm, helix_turns, vessel_radius_mm);
    throw ConfigError("phantom.kind must be straight, polyline or helix");
  }();
  if (bump_amp_mm != 0.0)
    phantom.set_radius_bump(bump_amp_mm, bump_center_mm, bump_sigma_mm);
  phantom.set_surface(Vec3(0, 0, surface_height_mm), Vec3(0, 0, 1));
  return phantom;
}

void ScenarioConfig::validate() const {
  calibration.validate();
  optimizer.validate();
  impedance.validate();
  if (initial_offset_deg < 0.0 || initial_offset_deg > 45.0)
    throw ConfigError("control.initial_offset_deg must be in [0, 45]");
  if (!(dt_s > 0.0) || dt_s > 0.02)
    throw ConfigError("control.dt_s must be in (0, 0.02]");
  if (frame_every_ticks < 1) throw ConfigError("control.frame_every_ticks must be >= 1");
  if (march_mm_s < 0.0 || march_mm_s > 20.0)
    throw ConfigError("control.march_mm_s must be in [0, 20]");
  if (buffer_capacity < 1) throw ConfigError("buffer.capacity must be >= 1");
  if (spread_mu < 0.0) throw ConfigError("buffer.mu must be >= 0");
  if (duration_s <= 0.0) throw ConfigError("control.duration_s must be > 0");
  if (frame_points < 8) throw ConfigError("frame_points must be >= 8");
}

}  // namespace vscan
