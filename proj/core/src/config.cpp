#include "dynfilter/config.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dynfilter/dataset.hpp"
#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw Error(ErrorCode::ConfigError,
              "'" + key + "': '" + value + "' is not " + expected);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !std::isfinite(v)) bad_value(key, value, "a number");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) bad_value(key, value, "an integer");
  return v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
  const long long v = to_int(key, value);
  if (v < 0) bad_value(key, value, "a non-negative integer");
  return static_cast<std::size_t>(v);
}

int to_small_count(const std::string& key, const std::string& value) {
  const std::size_t v = to_count(key, value);
  if (v > static_cast<std::size_t>(std::numeric_limits<int>::max())) bad_value(key, value, "in range");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
  if (value == "off" || value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "on/off");
}

Eigen::Vector3d to_vector(const std::string& key, const std::string& value) {
  std::vector<double> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(to_double(key, item));
  if (parts.size() != 3) bad_value(key, value, "a vector x,y,z");
  return {parts[0], parts[1], parts[2]};
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ObjectLabel to_label(const std::string& key, const std::string& value) {
  if (value == "person") return ObjectLabel::person();
  if (value == "unlabeled") return ObjectLabel::unlabeled();
  if (value.rfind("thing:", 0) == 0) {
    const auto parts = split(value.substr(6), ':');
    if (parts.size() == 2) return ObjectLabel::thing(static_cast<int>(to_int(key, parts[0])), parts[1]);
  }
  bad_value(key, value, "person, unlabeled or thing:ID:NAME");
}

MovingObject object(std::size_t n, Eigen::Vector3d centroid, Eigen::Vector3d half_extent,
                    ObjectLabel label) {
  MovingObject o;
  o.n_points = n;
  o.centroid = centroid;
  o.half_extent = half_extent;
  o.label = std::move(label);
  return o;
}

SceneConfig base_scene() {
  SceneConfig s;
  s.n_background_points = 300;
  s.background_min = {-4.0, -3.0, 4.0};
  s.background_max = {4.0, 3.0, 7.0};
  s.camera.kind = CameraPath::Kind::Arc;
  s.camera.origin = {-0.5, 0.0, 0.0};
  s.camera.radius = 0.5;
  s.camera.angular_speed = 1.2;
  s.camera.yaw_rate = 0.05;
  s.frame_count = 60;
  s.frame_rate = 30.0;
  return s;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  FilterConfig& f = sequence.filter;
  if (key == "dataset") {
    dataset = value;
  } else if (key == "masks") {
    masks = std::filesystem::path(value);
  } else if (key == "output") {
    output = value;
  } else if (key == "filter") {
    f.flags = parse_filter_flags(value, f.flags);
  } else if (key == "filtering") {
    sequence.filtering = to_bool(key, value);
  } else if (key == "epipolar-threshold") {
    f.epipolar_threshold = to_double(key, value);
  } else if (key == "ransac-iterations") {
    f.ransac.iterations = to_small_count(key, value);
    sequence.tracking.ransac.iterations = f.ransac.iterations;
  } else if (key == "ransac-threshold") {
    f.ransac.inlier_threshold = to_double(key, value);
    sequence.tracking.ransac.inlier_threshold = f.ransac.inlier_threshold;
  } else if (key == "ransac-min-inliers") {
    f.ransac.min_inliers = to_count(key, value);
    sequence.tracking.ransac.min_inliers = f.ransac.min_inliers;
  } else if (key == "iou-threshold") {
    f.iou_threshold = to_double(key, value);
  } else if (key == "check-stuff") {
    f.check_stuff = to_bool(key, value);
  } else if (key == "max-distance") {
    f.matching.max_distance = to_small_count(key, value);
  } else if (key == "seed") {
    const auto seed = static_cast<std::uint64_t>(to_count(key, value));
    f.ransac.seed = seed;
    sequence.tracking.ransac.seed = seed;
  } else if (key == "align") {
    align = parse_alignment_mode(value);
  } else if (key == "max-dt") {
    max_dt = to_double(key, value);
  } else if (key == "person-classes") {
    person_classes = split(value, ',');
  } else if (key == "prefetch") {
    sequence.prefetch = to_count(key, value);
  } else if (key == "min-parallax") {
    sequence.tracking.min_parallax = to_double(key, value);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown setting '" + key + "'");
  }
}

void RunConfig::validate() const {
  const FilterConfig& f = sequence.filter;
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (dataset.empty()) fail("no dataset given");
  if (!(f.epipolar_threshold > 0.0)) fail("epipolar-threshold must be > 0");
  if (f.ransac.iterations < 1) fail("ransac-iterations must be >= 1");
  if (!(f.ransac.inlier_threshold > 0.0)) fail("ransac-threshold must be > 0");
  if (!(f.iou_threshold >= 0.0 && f.iou_threshold <= 1.0)) fail("iou-threshold must be in [0, 1]");
  if (f.matching.max_distance < 0 || f.matching.max_distance > 256) {
    fail("max-distance must be in [0, 256]");
  }
  if (!(max_dt >= 0.0)) fail("max-dt must be >= 0");
  if (!(sequence.tracking.min_parallax >= 0.0)) fail("min-parallax must be >= 0");
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::map<std::string, std::string> values;
  try {
    values = read_key_value_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  for (const auto& [k, v] : values) config.set(k, v);
}

FilterFlags parse_filter_flags(const std::string& text, FilterFlags base) {
  for (const auto& item : split(text, ' ')) {
    for (const auto& part : split(item, ',')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) bad_value("filter", part, "name=on|off");
      const std::string name = part.substr(0, eq);
      const bool on = to_bool("filter " + name, part.substr(eq + 1));
      if (name == "people") {
        base.people = on;
      } else if (name == "things") {
        base.things = on;
      } else if (name == "unknown") {
        base.unknown = on;
      } else {
        bad_value("filter", name, "people, things or unknown");
      }
    }
  }
  return base;
}

std::string to_string(const FilterFlags& flags) {
  const auto s = [](bool b) { return b ? "on" : "off"; };
  return std::string("people=") + s(flags.people) + " things=" + s(flags.things) +
         " unknown=" + s(flags.unknown);
}

std::vector<std::string> scene_preset_names() {
  return {"static", "dynamic", "unknown_object", "ablation"};
}

SceneConfig scene_preset(const std::string& name) {
  SceneConfig s = base_scene();
  if (name == "static") {
    s.moving_objects.push_back(
        object(120, {0.4, 0.4, 3.0}, {0.3, 0.3, 0.3}, ObjectLabel::thing(56, "chair")));
  } else if (name == "dynamic") {
    s.frame_count = 200;
    auto person = object(400, {-0.5, 0.0, 2.6}, {0.25, 0.5, 0.15}, ObjectLabel::person());
    person.oscillation = {0.4, 0.0, 0.0};
    person.period = 3.0;
    auto chair = object(200, {0.7, 0.5, 3.0}, {0.3, 0.25, 0.3}, ObjectLabel::thing(56, "chair"));
    chair.oscillation = {0.0, 0.3, 0.0};
    chair.period = 2.5;
    s.moving_objects = {person, chair};
  } else if (name == "unknown_object") {
    s.camera.kind = CameraPath::Kind::Line;
    s.camera.origin = {-0.3, 0.0, 0.0};
    s.camera.velocity = {0.5, 0.0, 0.0};
    auto person = object(300, {0.0, 0.0, 2.6}, {0.25, 0.5, 0.15}, ObjectLabel::person());
    person.velocity = {0.0, 0.0, 0.0};
    person.oscillation = {0.0, 0.4, 0.0};
    person.period = 3.0;
    auto box = object(150, {0.3, 0.1, 2.3}, {0.2, 0.2, 0.2}, ObjectLabel::unlabeled());
    box.oscillation = person.oscillation;
    box.period = person.period;
    s.moving_objects = {person, box};
  } else if (name == "ablation") {
    s.frame_count = 150;
    s.n_background_points = 250;
    auto person = object(200, {-0.7, -0.3, 2.8}, {0.25, 0.5, 0.15}, ObjectLabel::person());
    person.oscillation = {0.3, 0.0, 0.0};
    person.period = 3.0;
    auto chair = object(350, {0.6, 0.5, 3.0}, {0.3, 0.25, 0.3}, ObjectLabel::thing(56, "chair"));
    chair.oscillation = {0.0, 0.3, 0.0};
    chair.period = 2.5;
    auto box = object(300, {0.1, -0.5, 2.4}, {0.2, 0.2, 0.2}, ObjectLabel::unlabeled());
    box.oscillation = {0.25, 0.25, 0.0};
    box.period = 2.0;
    s.moving_objects = {person, chair, box};
  } else {
    throw Error(ErrorCode::ConfigError, "unknown scene preset '" + name + "'");
  }
  return s;
}

SceneConfig parse_scene_config(const std::map<std::string, std::string>& values) {
  SceneConfig s = base_scene();
  if (const auto it = values.find("preset"); it != values.end()) s = scene_preset(it->second);
  if (const auto it = values.find("objects"); it != values.end()) {
    s.moving_objects.resize(to_count(it->first, it->second));
  }

  for (const auto& [key, value] : values) {
    if (key == "preset" || key == "objects") continue;
    if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(to_count(key, value));
    } else if (key == "frames") {
      s.frame_count = to_count(key, value);
    } else if (key == "frame-rate") {
      s.frame_rate = to_double(key, value);
    } else if (key == "noise") {
      s.pixel_noise = to_double(key, value);
    } else if (key == "width") {
      s.width = static_cast<int>(to_int(key, value));
    } else if (key == "height") {
      s.height = static_cast<int>(to_int(key, value));
    } else if (key == "fx") {
      s.intrinsics.fx = to_double(key, value);
    } else if (key == "fy") {
      s.intrinsics.fy = to_double(key, value);
    } else if (key == "cx") {
      s.intrinsics.cx = to_double(key, value);
    } else if (key == "cy") {
      s.intrinsics.cy = to_double(key, value);
    } else if (key == "background-points") {
      s.n_background_points = to_count(key, value);
    } else if (key == "background-min") {
      s.background_min = to_vector(key, value);
    } else if (key == "background-max") {
      s.background_max = to_vector(key, value);
    } else if (key == "camera") {
      if (value == "arc") {
        s.camera.kind = CameraPath::Kind::Arc;
      } else if (value == "line") {
        s.camera.kind = CameraPath::Kind::Line;
      } else if (value == "hold") {
        s.camera.kind = CameraPath::Kind::Hold;
      } else {
        bad_value(key, value, "arc, line or hold");
      }
    } else if (key == "camera-origin") {
      s.camera.origin = to_vector(key, value);
    } else if (key == "camera-velocity") {
      s.camera.velocity = to_vector(key, value);
    } else if (key == "camera-radius") {
      s.camera.radius = to_double(key, value);
    } else if (key == "camera-angular-speed") {
      s.camera.angular_speed = to_double(key, value);
    } else if (key == "camera-yaw-rate") {
      s.camera.yaw_rate = to_double(key, value);
    } else if (key.rfind("object.", 0) == 0) {
      const auto parts = split(key, '.');
      if (parts.size() != 3) throw Error(ErrorCode::ConfigError, "bad object key '" + key + "'");
      const std::size_t n = to_count(key, parts[1]);
      if (n >= s.moving_objects.size()) {
        throw Error(ErrorCode::ConfigError, "'" + key + "' refers to object " + parts[1] +
                                                " but the scene has " +
                                                std::to_string(s.moving_objects.size()));
      }
      MovingObject& o = s.moving_objects[n];
      const std::string& field = parts[2];
      if (field == "points") {
        o.n_points = to_count(key, value);
      } else if (field == "centroid") {
        o.centroid = to_vector(key, value);
      } else if (field == "velocity") {
        o.velocity = to_vector(key, value);
      } else if (field == "oscillation") {
        o.oscillation = to_vector(key, value);
      } else if (field == "period") {
        o.period = to_double(key, value);
      } else if (field == "half-extent") {
        o.half_extent = to_vector(key, value);
      } else if (field == "label") {
        o.label = to_label(key, value);
      } else {
        throw Error(ErrorCode::ConfigError, "unknown object field '" + field + "'");
      }
    } else {
      throw Error(ErrorCode::ConfigError, "unknown scene setting '" + key + "'");
    }
  }
  s.validate();
  return s;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  try {
    return parse_scene_config(read_key_value_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

}  // namespace dynfilter
