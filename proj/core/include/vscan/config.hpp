#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vscan/centerline.hpp"
#include "vscan/geometry.hpp"
#include "vscan/phantom.hpp"
#include "vscan/probe_control.hpp"

namespace vscan {

/// Plain-text `key = value` configuration ('#' starts a comment).
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Vec3 get_vec3(const std::string& key, const Vec3& fallback) const;
  /// Semicolon-separated point list: "x,y,z; x,y,z; ...".
  std::vector<Vec3> get_points(const std::string& key) const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Calibration from the documented bare keys: L_p_mm, D_I_mm, H_px, W_px, eps0_mm.
ImageCalibration load_image_calibration(const KeyValueConfig& kv);
ImageCalibration load_image_calibration_file(const std::string& path);

/// Flange-to-probe mount: rotation is identity or 180 degrees about z
/// (mount_flip_z), translation from mount_offset_mm.
Pose load_mount(const KeyValueConfig& kv);

/// Everything a screening run needs; see the README for the schema.
struct ScenarioConfig {
  // phantom
  std::string phantom_kind = "straight";  // straight | polyline | helix
  Vec3 phantom_origin_mm = Vec3(0, -150, -20);
  Vec3 phantom_direction = Vec3(0, 1, 0);
  double phantom_length_mm = 300.0;
  std::vector<Vec3> phantom_points_mm;
  double helix_radius_mm = 120.0;
  double helix_pitch_mm = 0.0;
  double helix_turns = 0.25;
  double vessel_radius_mm = 7.5;
  double bump_amp_mm = 0.0;
  double bump_center_mm = 60.0;
  double bump_sigma_mm = 10.0;
  double surface_height_mm = 0.0;  // skin plane z = h, outward normal +z

  // imaging
  ImageCalibration calibration;
  Pose mount_fp;
  int frame_points = 200;
  int max_points_per_frame = 120;
  double min_area_px2 = 30.0;
  /// Frames whose tracked centroid jumps farther than this from the previous
  /// frame are discarded; the vessel cannot move that far in 20 ms, so such
  /// detections are segmentation failures.
  double track_gate_mm = 4.0;

  // synthetic segmentation noise
  double noise_jitter_sigma_mm = 0.35;
  double noise_outlier_rate = 0.02;
  double noise_dropout_rate = 0.05;
  double noise_false_positive_rate = 0.05;

  // cloud buffer
  int buffer_capacity = 10;
  double spread_mu = 5.0;

  OptimizerConfig optimizer;

  // control loop
  double dt_s = 0.01;
  int frame_every_ticks = 2;  // 100 Hz control, 50 Hz frames
  double march_mm_s = 10.0;
  double initial_offset_deg = 0.0;
  double duration_s = 8.0;
  double start_arclength_mm = 15.0;
  ImpedanceParams impedance;
  double contact_stiffness_N_m = 5000.0;
  /// Minimum centroid travel before the first (cold) solve is attempted; an
  /// overlapped buffer fits a radial-direction artifact instead of the axis.
  double bootstrap_span_mm = 1.5;

  // convergence-time thresholds
  double or_thresh_deg = 5.0;
  double ce_thresh_mm = 0.5;
  double ra_thresh_mm = 1.0;
  double hold_s = 1.0;
  double lost_target_timeout_s = 1.0;

  std::uint64_t seed = 1;
  bool dump_ply = false;

  static ScenarioConfig from_config(const KeyValueConfig& kv);
  static ScenarioConfig from_file(const std::string& path);

  TubePhantom make_phantom() const;
  void validate() const;
};

}  // namespace vscan
