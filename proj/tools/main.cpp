#include <iostream>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dynfilter/error.hpp"

namespace {

using namespace dynfilter;

// Flags that map one-to-one onto RunConfig keys.
struct RunFlags {
  std::string config_file;
  std::vector<std::string> filter;
  bool no_filter = false;
  bool check_stuff = false;
  std::vector<std::pair<std::string, CLI::Option*>> keyed;
  std::vector<std::pair<std::string, std::string>> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key=value settings file; flags override it");
    app.add_option("--filter", filter, "people=on|off things=on|off unknown=on|off")
        ->expected(1, 3);
    app.add_flag("--no-filter", no_filter, "use every match for tracking (baseline)");
    app.add_flag("--check-stuff", check_stuff, "re-test background RANSAC outliers");
    const std::pair<const char*, const char*> keys[] = {
        {"dataset", "dataset directory"},
        {"masks", "mask directory (default <dataset>/masks)"},
        {"output", "output directory"},
        {"epipolar-threshold", "static/dynamic cut on epipolar distance, px"},
        {"ransac-iterations", "RANSAC iterations"},
        {"ransac-threshold", "RANSAC inlier distance, px"},
        {"ransac-min-inliers", "minimum consensus size"},
        {"iou-threshold", "instance association IoU"},
        {"max-distance", "largest accepted Hamming distance"},
        {"seed", "RANSAC seed"},
        {"align", "se3 | sim3 | none"},
        {"max-dt", "timestamp association tolerance, s"},
        {"person-classes", "comma-separated class names treated as people"},
        {"prefetch", "frames loaded ahead"},
        {"min-parallax", "median pixel motion below which the camera is still"},
    };
    values.resize(std::size(keys));
    for (std::size_t i = 0; i < std::size(keys); ++i) {
      values[i].first = keys[i].first;
      keyed.emplace_back(keys[i].first, app.add_option(std::string("--") + keys[i].first,
                                                       values[i].second, keys[i].second));
    }
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_file.empty()) apply_config_file(config, config_file);
    for (std::size_t i = 0; i < keyed.size(); ++i) {
      if (keyed[i].second->count() > 0) config.set(values[i].first, values[i].second);
    }
    if (!filter.empty()) {
      std::string joined;
      for (const auto& f : filter) joined += f + ' ';
      config.set("filter", joined);
    }
    if (no_filter) config.set("filtering", "off");
    if (check_stuff) config.set("check-stuff", "on");
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic keypoint filtering with panoptic masks and epipolar geometry"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "filter and track a dataset");
  run_flags.attach(*run);

  RunFlags ablate_flags;
  CLI::App* ablate = app.add_subcommand("ablate", "compare the four filter configurations");
  ablate_flags.attach(*ablate);

  std::string scene_file, preset, sim_output;
  std::uint64_t sim_seed = 0;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  auto* scene_opt = simulate->add_option("--scene", scene_file, "scene key=value file");
  auto* preset_opt = simulate->add_option("--preset", preset, "static | dynamic | unknown_object | ablation");
  auto* seed_opt = simulate->add_option("--seed", sim_seed, "generator seed");
  simulate->add_option("--output", sim_output, "dataset directory")->required();

  std::string est_file, gt_file, align = "sim3", residuals_file;
  double max_dt = 0.02;
  CLI::App* eval = app.add_subcommand("eval", "absolute trajectory error of a TUM trajectory");
  eval->add_option("--estimate", est_file, "estimated trajectory")->required();
  eval->add_option("--ground-truth", gt_file, "ground-truth trajectory")->required();
  eval->add_option("--align", align, "se3 | sim3 | none");
  eval->add_option("--max-dt", max_dt, "timestamp association tolerance, s");
  auto* residuals_opt = eval->add_option("--residuals", residuals_file, "per-pose residual CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      cli::cmd_run(run_flags.resolve(), std::cerr);
    } else if (ablate->parsed()) {
      cli::cmd_ablate(ablate_flags.resolve(), std::cerr);
    } else if (simulate->parsed()) {
      if (scene_opt->count() == 0 && preset_opt->count() == 0) {
        std::cerr << "simulate: give --scene and/or --preset\n";
        return 2;
      }
      cli::cmd_simulate(scene_opt->count() ? std::optional<std::filesystem::path>(scene_file)
                                           : std::nullopt,
                        preset_opt->count() ? std::optional<std::string>(preset) : std::nullopt,
                        seed_opt->count() ? std::optional<std::uint64_t>(sim_seed) : std::nullopt,
                        sim_output, std::cerr);
    } else if (eval->parsed()) {
      cli::cmd_eval(est_file, gt_file, parse_alignment_mode(align), max_dt,
                    residuals_opt->count() ? std::optional<std::filesystem::path>(residuals_file)
                                           : std::nullopt,
                    std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "dynfilter: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return 0;
}
