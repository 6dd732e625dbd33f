#include <benchmark/benchmark.h>

#include <Eigen/Geometry>
#include <cmath>

#include "vscan/centerline.hpp"
#include "vscan/cloud_buffer.hpp"
#include "vscan/mask.hpp"
#include "vscan/phantom.hpp"
#include "vscan/probe_control.hpp"
#include "vscan/rng.hpp"

namespace {

using namespace vscan;

std::vector<BoundaryCloud> make_clouds(int n_clouds, int per_cloud) {
  const Vec3 axis = Vec3(0.2, 0.1, 1.0).normalized();
  const Mat3 f = frame_with_z(axis);
  Rng rng(1);
  std::vector<BoundaryCloud> clouds;
  for (int j = 0; j < n_clouds; ++j) {
    std::vector<Vec3> pts;
    for (int k = 0; k < per_cloud; ++k) {
      const double th = 2.0 * M_PI * k / per_cloud;
      pts.push_back(2.0 * j * f.col(2) +
                    8.0 * (std::cos(th) * f.col(0) + std::sin(th) * f.col(1)) +
                    Vec3(rng.normal(0, 0.3), rng.normal(0, 0.3), rng.normal(0, 0.3)));
    }
    clouds.push_back(BoundaryCloud::from_points(std::move(pts), 0.02 * j, Pose::identity()));
  }
  return clouds;
}

void BM_TickTockStep(benchmark::State& state) {
  const auto clouds = make_clouds(10, static_cast<int>(state.range(0)));
  CloudRingBuffer buf(10, 5.0);
  for (const auto& c : clouds) buf.push(c);
  const auto spread = buf.spread_view();
  const auto raw = buf.raw_view();
  OptimizerConfig cfg;
  std::optional<CenterlineEstimate> est;
  for (auto _ : state) {
    est = tick_tock_step(spread, raw, est, cfg);
    benchmark::DoNotOptimize(est->objective_value_mm2);
  }
}
BENCHMARK(BM_TickTockStep)->Arg(40)->Arg(120);

void BM_SpreadView(benchmark::State& state) {
  const auto clouds = make_clouds(10, static_cast<int>(state.range(0)));
  CloudRingBuffer buf(10, 5.0);
  for (const auto& c : clouds) buf.push(c);
  for (auto _ : state) {
    auto view = buf.spread_view();
    benchmark::DoNotOptimize(view.data());
  }
}
BENCHMARK(BM_SpreadView)->Arg(40)->Arg(120);

void BM_SliceTube(benchmark::State& state) {
  const TubePhantom tube =
      TubePhantom::straight(Vec3(0, -200, 20), Vec3(0, 1, 0), 400.0, 7.5);
  ImageCalibration cal;
  Pose pose;
  for (auto _ : state) {
    auto cloud = slice_tube(tube, pose, cal, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(cloud.points_mm.data());
  }
}
BENCHMARK(BM_SliceTube)->Arg(64)->Arg(200);

void BM_ExtractCandidates(benchmark::State& state) {
  BinaryMask mask(256, 256);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      if (std::hypot(x - 128.0, y - 100.0) < 35.0 ||
          std::hypot(x - 40.0, y - 200.0) < 12.0)
        mask.set(x, y);
  for (auto _ : state) {
    auto cands = extract_candidates(mask, 30.0);
    benchmark::DoNotOptimize(cands.data());
  }
}
BENCHMARK(BM_ExtractCandidates);

void BM_ImpedanceStep(benchmark::State& state) {
  ImpedanceParams params;
  SurfaceContact contact;
  PlantState s;
  s.pose.translation_mm = Vec3(0, 0, 1.0);
  ProbeCommand cmd;
  cmd.target_pose.translation_mm = Vec3(5, 0, 0);
  for (auto _ : state) {
    auto r = step_impedance(s, cmd, params, contact, 0.01);
    benchmark::DoNotOptimize(r.next.pose.translation_mm.data());
  }
}
BENCHMARK(BM_ImpedanceStep);

}  // namespace

BENCHMARK_MAIN();
