// Command-line front end: single scenario runs and batch adaptive-vs-baseline
// comparisons with the exact sign test.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pullnav/metrics.hpp"
#include "pullnav/scenario.hpp"
#include "pullnav/sim.hpp"
#include "pullnav/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNoPath = 3;

json metrics_to_json(const pullnav::Metrics& m, std::uint64_t seed, bool adaptive) {
  json j;
  j["seed"] = seed;
  j["mode"] = adaptive ? "adaptive" : "baseline";
  j["mean_abs_py"] = m.mean_abs_py;
  j["max_abs_py"] = m.max_abs_py;
  j["exceedance"] = m.exceedance;
  j["completion_s"] = m.completion_s;
  j["path_length_m"] = m.path_length_m;
  j["tracking_loss_ticks"] = m.tracking_loss_ticks;
  j["grid_violations"] = m.grid_violations;
  j["ticks"] = m.ticks;
  j["valid_ticks"] = m.valid_ticks;
  j["footprint_half_width"] = m.footprint_half_width;
  return j;
}

struct RunArtifacts {
  pullnav::Metrics metrics;
  bool ok = false;
  std::string error;
};

RunArtifacts execute_run(pullnav::SimConfig cfg, std::uint64_t seed, bool adaptive,
                         const fs::path& out_dir) {
  RunArtifacts art;
  cfg.seed = seed;
  cfg.adaptive = adaptive;
  try {
    const pullnav::RunResult result = pullnav::run(cfg);
    fs::create_directories(out_dir);
    {
      std::ofstream f(out_dir / "trace.csv", std::ios::binary);
      pullnav::trace_to_csv(result.trace, f);
    }
    {
      std::ofstream f(out_dir / "metrics.json", std::ios::binary);
      f << metrics_to_json(result.metrics, seed, adaptive).dump(2) << '\n';
    }
    art.metrics = result.metrics;
    art.ok = true;
  } catch (const std::exception& e) {
    art.error = e.what();
  }
  return art;
}

bool parse_seed_range(const std::string& text, std::uint64_t& lo, std::uint64_t& hi) {
  const auto pos = text.find("..");
  try {
    if (pos == std::string::npos) {
      lo = hi = std::stoull(text);
    } else {
      lo = std::stoull(text.substr(0, pos));
      hi = std::stoull(text.substr(pos + 2));
    }
  } catch (const std::exception&) {
    return false;
  }
  return lo >= 1 && hi >= lo;
}

int cmd_run(const std::string& scenario_path, std::uint64_t seed, bool baseline,
            const std::string& out, std::optional<double> footprint) {
  pullnav::SimConfig cfg;
  try {
    cfg = pullnav::load_scenario(scenario_path);
  } catch (const pullnav::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kExitValidation;
  }
  if (footprint) cfg.robot.footprint_half_width = *footprint;

  cfg.seed = seed;
  cfg.adaptive = !baseline;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    const pullnav::RunResult result = pullnav::run(cfg);
    fs::create_directories(out);
    {
      std::ofstream f(fs::path(out) / "trace.csv", std::ios::binary);
      pullnav::trace_to_csv(result.trace, f);
    }
    {
      std::ofstream f(fs::path(out) / "metrics.json", std::ios::binary);
      f << metrics_to_json(result.metrics, seed, cfg.adaptive).dump(2) << '\n';
    }
    std::cout << "wrote " << (fs::path(out) / "trace.csv").string() << " ("
              << result.metrics.ticks << " ticks, mean |p_y| = " << result.metrics.mean_abs_py
              << " m)\n";
  } catch (const pullnav::NoPathError& e) {
    std::cerr << e.what() << '\n';
    return kExitNoPath;
  } catch (const pullnav::EmptyPlanError& e) {
    std::cerr << e.what() << '\n';
    return kExitNoPath;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kExitRunFailed;
  }
  return kExitOk;
}

int cmd_compare(const std::string& scenario_path, const std::string& seeds,
                const std::string& out, std::optional<double> footprint) {
  pullnav::SimConfig cfg;
  try {
    cfg = pullnav::load_scenario(scenario_path);
  } catch (const pullnav::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kExitValidation;
  }
  if (footprint) cfg.robot.footprint_half_width = *footprint;

  std::uint64_t lo = 1, hi = 12;
  if (!parse_seed_range(seeds, lo, hi)) {
    std::cerr << "bad --seeds range: " << seeds << " (expected e.g. 1..12)\n";
    return kExitValidation;
  }

  struct PairOutcome {
    std::uint64_t seed;
    RunArtifacts adaptive;
    RunArtifacts baseline;
  };

  fs::create_directories(out);
  std::vector<std::future<PairOutcome>> futures;
  for (std::uint64_t seed = lo; seed <= hi; ++seed) {
    futures.push_back(std::async(std::launch::async, [&, seed] {
      PairOutcome p;
      p.seed = seed;
      char name[64];
      std::snprintf(name, sizeof(name), "seed_%02llu", static_cast<unsigned long long>(seed));
      p.adaptive = execute_run(cfg, seed, true, fs::path(out) / (std::string(name) + "_adaptive"));
      p.baseline = execute_run(cfg, seed, false, fs::path(out) / (std::string(name) + "_baseline"));
      return p;
    }));
  }

  bool any_failed = false;
  std::vector<std::pair<double, double>> paired_means;
  std::ofstream table(fs::path(out) / "comparison.csv", std::ios::binary);
  table << "seed,mode,mean_py,max_py,exceedance,completion_s\n";
  char row[256];
  for (auto& fut : futures) {
    const PairOutcome p = fut.get();  // seed-ascending by construction
    for (const auto* side : {&p.adaptive, &p.baseline}) {
      const bool is_adaptive = side == &p.adaptive;
      if (!side->ok) {
        std::cerr << "seed " << p.seed << (is_adaptive ? " adaptive" : " baseline")
                  << " failed: " << side->error << '\n';
        any_failed = true;
        continue;
      }
      std::snprintf(row, sizeof(row), "%llu,%s,%.17g,%.17g,%.17g,%.17g\n",
                    static_cast<unsigned long long>(p.seed), is_adaptive ? "adaptive" : "baseline",
                    side->metrics.mean_abs_py, side->metrics.max_abs_py, side->metrics.exceedance,
                    side->metrics.completion_s);
      table << row;
    }
    if (p.adaptive.ok && p.baseline.ok)
      paired_means.emplace_back(p.adaptive.metrics.mean_abs_py, p.baseline.metrics.mean_abs_py);
  }

  const pullnav::SignTestResult st = pullnav::sign_test(paired_means);
  std::cout << "pairs: " << paired_means.size() << ", adaptive lower in " << st.wins << ", higher in "
            << st.losses << ", ties " << st.ties << '\n';
  std::cout << "one-sided sign test p = " << st.p_one_sided << '\n';
  const int effective_n = st.wins + st.losses;
  if (effective_n < 5)
    std::cout << "sign test underpowered: " << effective_n
              << " informative pairs cannot reach p <= 0.05\n";

  json summary;
  summary["pairs"] = paired_means.size();
  summary["wins"] = st.wins;
  summary["losses"] = st.losses;
  summary["ties"] = st.ties;
  summary["p_one_sided"] = st.p_one_sided;
  summary["underpowered"] = effective_n < 5;
  std::ofstream sf(fs::path(out) / "sign_test.json", std::ios::binary);
  sf << summary.dump(2) << '\n';

  return any_failed ? kExitRunFailed : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar mobile-manipulator guidance simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out = "out";
  std::uint64_t seed = 1;
  bool baseline = false;
  std::string seeds = "1..12";
  double footprint_flag = -1.0;

  CLI::App* run_cmd = app.add_subcommand("run", "run one scenario and write trace + metrics");
  run_cmd->add_option("--scenario", scenario, "scenario JSON file")->required();
  run_cmd->add_option("--seed", seed, "RNG seed / subject index");
  run_cmd->add_flag("--baseline", baseline, "disable adaptive pulling (k_y_hat forced to 0)");
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_option("--footprint-half-width", footprint_flag, "override footprint half-width (m)");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "paired adaptive-vs-baseline batch over a seed range");
  compare_cmd->add_option("--scenario", scenario, "scenario JSON file")->required();
  compare_cmd->add_option("--seeds", seeds, "seed range, e.g. 1..12");
  compare_cmd->add_option("--out", out, "output directory");
  compare_cmd->add_option("--footprint-half-width", footprint_flag,
                          "override footprint half-width (m)");

  CLI11_PARSE(app, argc, argv);

  std::optional<double> footprint;
  if (footprint_flag > 0.0) footprint = footprint_flag;

  if (run_cmd->parsed()) return cmd_run(scenario, seed, baseline, out, footprint);
  return cmd_compare(scenario, seeds, out, footprint);
}
