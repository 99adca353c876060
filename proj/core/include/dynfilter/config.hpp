#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dynfilter/evaluation.hpp"
#include "dynfilter/filter.hpp"
#include "dynfilter/odometry.hpp"
#include "dynfilter/simulator.hpp"

namespace dynfilter {

/// Settings of one pipeline run. Keys shared by config files and
/// `--key value` flags:
///   dataset, masks, output, filter ("people=on things=off unknown=on"),
///   filtering (on|off), epipolar-threshold, ransac-iterations,
///   ransac-threshold, ransac-min-inliers, iou-threshold, check-stuff,
///   max-distance, seed, align (se3|sim3|none), max-dt, person-classes,
///   prefetch
struct RunConfig {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> masks;
  std::filesystem::path output = ".";
  SequenceOptions sequence;
  std::vector<std::string> person_classes{"person"};
  AlignmentMode align = AlignmentMode::Sim3;
  double max_dt = 0.02;

  /// Sets one key. Throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Threshold and parameter sanity. Throws ConfigError.
  void validate() const;
};

/// Applies every key of a key=value file in file order.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// "people=on things=off unknown=off"; omitted filters keep their value.
FilterFlags parse_filter_flags(const std::string& text, FilterFlags base = {});
std::string to_string(const FilterFlags& flags);

/// Named starting points for scene files.
///   static          parked chair, camera arc
///   dynamic         swaying person and chair, camera arc, 200 frames
///   unknown_object  person carrying an unlabeled box, camera line
///   ablation        person, moving chair and unlabeled box, camera arc
SceneConfig scene_preset(const std::string& name);
std::vector<std::string> scene_preset_names();

/// Scene keys: preset (applied first), seed, frames, frame-rate, noise,
/// width, height, fx, fy, cx, cy, background-points, background-min,
/// background-max, camera (arc|line|hold), camera-origin, camera-velocity,
/// camera-radius, camera-angular-speed, camera-yaw-rate, objects (count),
/// object.N.points, object.N.centroid, object.N.velocity,
/// object.N.oscillation, object.N.period, object.N.half-extent,
/// object.N.label (person | thing:ID:NAME | unlabeled). Vectors are "x,y,z".
/// Throws ConfigError.
SceneConfig parse_scene_config(const std::map<std::string, std::string>& values);
SceneConfig load_scene_config(const std::filesystem::path& path);

}  // namespace dynfilter
