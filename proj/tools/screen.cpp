// screen: command-line front end for the vessel screening simulator.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "vscan/cloud_buffer.hpp"
#include "vscan/screening.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_offsets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw vscan::ConfigError("--offsets: no values parsed");
  return out;
}

json summary_json(const vscan::RunSummary& s) {
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  return json{{"status", vscan::to_string(s.status)},
              {"converged", s.converged},
              {"t_or_s", opt(s.t_or_s)},
              {"t_ce_s", opt(s.t_ce_s)},
              {"t_ra_s", opt(s.t_ra_s)},
              {"steady_start_s", s.steady_start_s},
              {"e_or_rea_mean_deg", s.e_or_rea.mean_abs},
              {"e_or_rea_sd_deg", s.e_or_rea.sd_abs},
              {"e_or_com_mean_deg", s.e_or_com.mean_abs},
              {"e_ce_mean_mm", s.e_ce.mean_abs},
              {"e_ra_mean_abs_mm", s.e_ra.mean_abs},
              {"e_ra_mean_signed_mm", s.e_ra.mean_signed},
              {"rows", s.rows},
              {"duration_s", s.duration_s}};
}

void print_summary(const vscan::RunSummary& s) {
  auto opt = [](const std::optional<double>& v) {
    return v ? vscan::format_double(*v) + " s" : std::string("-");
  };
  std::cout << "status:        " << vscan::to_string(s.status) << "\n"
            << "t_or / t_ce / t_ra:  " << opt(s.t_or_s) << " / " << opt(s.t_ce_s)
            << " / " << opt(s.t_ra_s) << "\n"
            << "steady window: from " << vscan::format_double(s.steady_start_s)
            << " s (" << s.rows << " rows total)\n"
            << "e_or_rea: " << vscan::format_double(s.e_or_rea.mean_abs) << " +- "
            << vscan::format_double(s.e_or_rea.sd_abs) << " deg\n"
            << "e_or_com: " << vscan::format_double(s.e_or_com.mean_abs) << " +- "
            << vscan::format_double(s.e_or_com.sd_abs) << " deg\n"
            << "e_ce:     " << vscan::format_double(s.e_ce.mean_abs) << " +- "
            << vscan::format_double(s.e_ce.sd_abs) << " mm\n"
            << "e_ra:     " << vscan::format_double(s.e_ra.mean_abs) << " +- "
            << vscan::format_double(s.e_ra.sd_abs) << " mm (signed mean "
            << vscan::format_double(s.e_ra.mean_signed) << ")\n";
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_dir) {
  vscan::ScenarioConfig cfg = vscan::ScenarioConfig::from_file(config_path);
  if (seed) cfg.seed = *seed;
  const vscan::ScreeningRun run = vscan::run_screening(cfg);

  fs::create_directories(out_dir);
  const fs::path trace_path = fs::path(out_dir) / "trace.csv";
  vscan::write_trace_csv(run.trace, trace_path.string());

  {
    const auto& s = run.trace.summary;
    auto opt = [](const std::optional<double>& v) {
      return v ? vscan::format_double(*v) : std::string("nan");
    };
    std::ofstream f((fs::path(out_dir) / "summary.csv").string(), std::ios::binary);
    f << "status,converged,t_or_s,t_ce_s,t_ra_s,steady_start_s,"
         "e_or_rea_mean_deg,e_or_rea_sd_deg,e_or_com_mean_deg,e_or_com_sd_deg,"
         "e_ce_mean_mm,e_ce_sd_mm,e_ra_mean_abs_mm,e_ra_sd_mm,e_ra_mean_signed_mm,"
         "rows\n";
    f << vscan::to_string(s.status) << ',' << (s.converged ? 1 : 0) << ','
      << opt(s.t_or_s) << ',' << opt(s.t_ce_s) << ',' << opt(s.t_ra_s) << ','
      << vscan::format_double(s.steady_start_s) << ','
      << vscan::format_double(s.e_or_rea.mean_abs) << ','
      << vscan::format_double(s.e_or_rea.sd_abs) << ','
      << vscan::format_double(s.e_or_com.mean_abs) << ','
      << vscan::format_double(s.e_or_com.sd_abs) << ','
      << vscan::format_double(s.e_ce.mean_abs) << ','
      << vscan::format_double(s.e_ce.sd_abs) << ','
      << vscan::format_double(s.e_ra.mean_abs) << ','
      << vscan::format_double(s.e_ra.sd_abs) << ','
      << vscan::format_double(s.e_ra.mean_signed) << ',' << s.rows << "\n";
  }

  json meta;
  meta["config_file"] = config_path;
  meta["seed"] = cfg.seed;
  meta["summary"] = summary_json(run.trace.summary);
  std::ofstream((fs::path(out_dir) / "meta.json").string()) << meta.dump(2) << "\n";

  if (cfg.dump_ply) {
    if (!run.final_raw_points_mm.empty())
      vscan::save_ply(run.final_raw_points_mm,
                      (fs::path(out_dir) / "buffer_raw.ply").string());
    if (!run.final_spread_points_mm.empty())
      vscan::save_ply(run.final_spread_points_mm,
                      (fs::path(out_dir) / "buffer_spread.ply").string());
  }

  print_summary(run.trace.summary);
  std::cout << "trace: " << trace_path.string() << "\n";
  return run.trace.summary.status == vscan::RunStatus::Completed ? 0 : 2;
}

int cmd_batch(const std::string& config_path, const std::string& offsets_text,
              int repeats, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
  vscan::ScenarioConfig cfg = vscan::ScenarioConfig::from_file(config_path);
  if (seed) cfg.seed = *seed;
  const auto offsets = parse_offsets(offsets_text);
  const vscan::BatchResult batch = vscan::batch_runs(cfg, offsets, repeats);

  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / "runs.csv";
  std::ofstream(csv_path.string(), std::ios::binary) << batch.to_csv();

  json meta;
  meta["config_file"] = config_path;
  meta["seed"] = cfg.seed;
  meta["offsets_deg"] = offsets;
  meta["repeats"] = repeats;
  json aggs = json::array();
  for (const auto& a : batch.aggregates) {
    aggs.push_back(json{{"offset", a.offset_label},
                        {"e_or_rea_mean_deg", a.e_or_rea.mean_abs},
                        {"e_or_com_mean_deg", a.e_or_com.mean_abs},
                        {"e_ce_mean_mm", a.e_ce.mean_abs},
                        {"e_ra_mean_abs_mm", a.e_ra.mean_abs},
                        {"aborted", a.aborted},
                        {"total", a.total}});
  }
  meta["aggregates"] = aggs;
  std::ofstream((fs::path(out_dir) / "meta.json").string()) << meta.dump(2) << "\n";

  int aborted = 0;
  for (const auto& r : batch.runs)
    if (r.summary.status != vscan::RunStatus::Completed) ++aborted;
  std::cout << batch.runs.size() << " runs (" << aborted << " aborted), results in "
            << csv_path.string() << "\n";
  const auto& all = batch.aggregates.back();
  std::cout << "all offsets: e_or_rea " << vscan::format_double(all.e_or_rea.mean_abs)
            << " deg, e_ce " << vscan::format_double(all.e_ce.mean_abs) << " mm, e_ra "
            << vscan::format_double(all.e_ra.mean_abs) << " mm\n";
  return 0;
}

int cmd_replay(const std::string& trace_path) {
  const vscan::ScreeningTrace trace = vscan::read_trace_csv(trace_path);
  for (const auto& h : trace.header) std::cout << "# " << h << "\n";
  print_summary(trace.summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autonomous ultrasound vessel screening simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", offsets_text = "0,15,30,45", trace_path;
  int repeats = 10;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run one screening scenario");
  run->add_option("--config", config_path, "scenario config file")->required();
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory");

  auto* batch = app.add_subcommand("batch", "Sweep initial offsets x repeats");
  batch->add_option("--config", config_path, "scenario config file")->required();
  batch->add_option("--offsets", offsets_text, "comma-separated initial offsets, deg");
  batch->add_option("--repeats", repeats, "repeats per offset");
  batch->add_option("--seed", seed, "override the config seed");
  batch->add_option("--out", out_dir, "output directory");

  auto* replay = app.add_subcommand("replay", "Recompute the summary of a trace CSV");
  replay->add_option("--trace", trace_path, "trace.csv from a previous run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir);
    if (batch->parsed()) return cmd_batch(config_path, offsets_text, repeats, seed, out_dir);
    if (replay->parsed()) return cmd_replay(trace_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
