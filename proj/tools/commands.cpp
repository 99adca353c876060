#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "dynfilter/dataset.hpp"
#include "dynfilter/error.hpp"

namespace dynfilter::cli {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

DiskDataset open_dataset(const RunConfig& config) {
  DatasetOptions options;
  options.masks_dir = config.masks;
  options.panoptic.person_classes = config.person_classes;
  return DiskDataset(config.dataset, options);
}

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void cmd_run(const RunConfig& config, std::ostream& log) {
  config.validate();
  const DiskDataset dataset = open_dataset(config);
  const SequenceResult result = run_sequence(dataset, config.sequence);

  fs::create_directories(config.output);
  const fs::path traj_path = config.output / "trajectory.txt";
  const fs::path reports_path = config.output / "reports.jsonl";
  {
    auto out = open_out(traj_path);
    write_tum_trajectory(result.trajectory, out);
    check_written(out, traj_path);
  }
  {
    auto out = open_out(reports_path);
    for (const auto& r : result.reports) out << r.to_json_line() << '\n';
    check_written(out, reports_path);
  }
  log << "frames " << result.trajectory.size() << ", tracking lost on " << result.lost_frames
      << '\n';

  if (!dataset.ground_truth()) return;
  const AteResult ate_result =
      ate(result.trajectory, *dataset.ground_truth(), config.align, config.max_dt);
  auto metrics = nlohmann::ordered_json::parse(metrics_json(ate_result));
  metrics["lost_frames"] = result.lost_frames;
  if (!dataset.dynamic_labels().empty()) {
    ClassificationMetrics cm;
    for (std::size_t i = 0; i < result.verdicts.size(); ++i) {
      cm += classification_metrics(result.verdicts[i], dataset.dynamic_labels()[i]);
    }
    metrics["classification"] = {{"true_positives", cm.true_positives},
                                 {"false_positives", cm.false_positives},
                                 {"true_negatives", cm.true_negatives},
                                 {"false_negatives", cm.false_negatives},
                                 {"precision", cm.precision()},
                                 {"recall", cm.recall()}};
  }
  const fs::path metrics_path = config.output / "metrics.json";
  const fs::path residuals_path = config.output / "residuals.csv";
  {
    auto out = open_out(metrics_path);
    out << metrics.dump(2) << '\n';
    check_written(out, metrics_path);
  }
  {
    auto out = open_out(residuals_path);
    write_residuals_csv(ate_result, out);
    check_written(out, residuals_path);
  }
  log << "ate_rmse " << format_g17(ate_result.rmse) << " m over " << ate_result.n_pairs
      << " poses (" << to_string(config.align) << ")\n";
}

void cmd_simulate(const std::optional<fs::path>& scene_file, const std::optional<std::string>& preset,
                  const std::optional<std::uint64_t>& seed, const fs::path& output,
                  std::ostream& log) {
  std::map<std::string, std::string> values;
  if (scene_file) {
    try {
      values = read_key_value_file(*scene_file);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
  }
  if (preset) values["preset"] = *preset;
  if (seed) values["seed"] = std::to_string(*seed);
  const SceneConfig scene = parse_scene_config(values);
  const SyntheticSequence sequence = generate_sequence(scene);
  write_sequence_dataset(sequence, output);
  log << "wrote " << sequence.frames.size() << " frames to " << output.string() << '\n';
}

void cmd_eval(const fs::path& estimate, const fs::path& ground_truth, AlignmentMode mode,
              double max_dt, const std::optional<fs::path>& residuals, std::ostream& out) {
  const AteResult result =
      ate(read_tum_trajectory(estimate), read_tum_trajectory(ground_truth), mode, max_dt);
  if (residuals) {
    auto csv = open_out(*residuals);
    write_residuals_csv(result, csv);
    check_written(csv, *residuals);
  }
  out << metrics_json(result) << '\n';
}

void cmd_ablate(const RunConfig& config, std::ostream& log) {
  config.validate();
  const DiskDataset dataset = open_dataset(config);
  if (!dataset.ground_truth()) {
    throw Error(ErrorCode::DatasetError,
                (config.dataset / "groundtruth.txt").string() + " is required for ablation");
  }
  struct Row {
    const char* name;
    FilterFlags flags;
  };
  const Row rows[] = {{"people", {true, false, false}},
                      {"people+things", {true, true, false}},
                      {"people+unknown", {true, false, true}},
                      {"all", {true, true, true}}};

  fs::create_directories(config.output);
  const fs::path csv_path = config.output / "ablation.csv";
  std::string csv = "configuration,people,things,unknown,ate_rmse,n_pairs,lost_frames\n";
  for (const auto& row : rows) {
    SequenceOptions options = config.sequence;
    options.filtering = true;
    options.filter.flags = row.flags;
    const SequenceResult result = run_sequence(dataset, options);
    const AteResult a = ate(result.trajectory, *dataset.ground_truth(), config.align, config.max_dt);
    csv += std::string(row.name) + ',' + (row.flags.people ? "on" : "off") + ',' +
           (row.flags.things ? "on" : "off") + ',' + (row.flags.unknown ? "on" : "off") + ',' +
           format_g17(a.rmse) + ',' + std::to_string(a.n_pairs) + ',' +
           std::to_string(result.lost_frames) + '\n';
    log << row.name << ": ate_rmse " << format_g17(a.rmse) << " m\n";
  }
  auto out = open_out(csv_path);
  out << csv;
  check_written(out, csv_path);
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (category_of(err->code())) {
      case ErrorCategory::Usage: return 2;
      case ErrorCategory::Data: return 3;
      case ErrorCategory::Numerical: return 4;
    }
  }
  return 3;
}

}  // namespace dynfilter::cli
