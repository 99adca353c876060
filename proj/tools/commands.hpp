#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "dynfilter/config.hpp"

namespace dynfilter::cli {

/// Runs the pipeline on a dataset and writes trajectory.txt and
/// reports.jsonl, plus metrics.json and residuals.csv when the dataset has
/// ground truth. Throws dynfilter::Error.
void cmd_run(const RunConfig& config, std::ostream& log);

/// Generates a scene (file, preset, or preset overridden by file) and
/// persists it as a dataset.
void cmd_simulate(const std::optional<std::filesystem::path>& scene_file,
                  const std::optional<std::string>& preset,
                  const std::optional<std::uint64_t>& seed, const std::filesystem::path& output,
                  std::ostream& log);

/// Prints the metrics JSON for an estimate against ground truth.
void cmd_eval(const std::filesystem::path& estimate, const std::filesystem::path& ground_truth,
              AlignmentMode mode, double max_dt,
              const std::optional<std::filesystem::path>& residuals, std::ostream& out);

/// Runs the four filter configurations and writes ablation.csv.
void cmd_ablate(const RunConfig& config, std::ostream& log);

/// 0 success, 2 usage, 3 data, 4 numerical.
int exit_code_for(const std::exception& e);

}  // namespace dynfilter::cli
