#include "dynfilter/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dynfilter/error.hpp"
#include "dynfilter/evaluation.hpp"
#include "png_io.hpp"

namespace dynfilter {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool skip_line(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t[0] == '#';
}

std::string at_line(const fs::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

double parse_double(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw Error(ErrorCode::DatasetError, where + ": '" + text + "' is not a number");
  }
  return v;
}

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

std::map<std::string, std::string> read_key_value_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, at_line(path, line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ParseError, at_line(path, line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

DiskDataset::DiskDataset(const fs::path& root, DatasetOptions options)
    : root_(root), options_(std::move(options)) {
  if (!fs::is_directory(root_)) {
    throw Error(ErrorCode::DatasetError, "dataset directory " + root_.string() + " does not exist");
  }
  masks_dir_ = options_.masks_dir.value_or(root_ / "masks");
  if (!fs::is_directory(masks_dir_)) {
    throw Error(ErrorCode::DatasetError, "masks directory " + masks_dir_.string() + " does not exist");
  }

  const fs::path calibration = root_ / "calibration.txt";
  if (fs::exists(calibration)) {
    const auto kv = read_key_value_file(calibration);
    const auto get = [&](const char* key, double fallback) {
      const auto it = kv.find(key);
      return it == kv.end() ? fallback : parse_double(it->second, calibration.string() + ": " + key);
    };
    intrinsics_.fx = get("fx", intrinsics_.fx);
    intrinsics_.fy = get("fy", intrinsics_.fy);
    intrinsics_.cx = get("cx", intrinsics_.cx);
    intrinsics_.cy = get("cy", intrinsics_.cy);
    try {
      intrinsics_.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::DatasetError, calibration.string() + ": " + e.what());
    }
  }

  const fs::path features = root_ / "features.txt";
  const fs::path frames = root_ / "frames.txt";
  const fs::path rgb_list = root_ / "rgb.txt";
  if (fs::exists(features)) {
    try {
      features_ = read_feature_file(features);
    } catch (const Error& e) {
      throw Error(ErrorCode::DatasetError, e.what());
    }
    std::ifstream in(frames);
    if (!in) throw Error(ErrorCode::DatasetError, "frame list " + frames.string() + " is missing");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (skip_line(line)) continue;
      std::istringstream fields(line);
      FrameEntry entry;
      if (!(fields >> entry.frame_id >> entry.timestamp)) {
        throw Error(ErrorCode::DatasetError,
                    at_line(frames, line_no) + ": expected 'frame_id timestamp'");
      }
      frames_.push_back(entry);
    }
  } else if (fs::exists(rgb_list)) {
    std::ifstream in(rgb_list);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (skip_line(line)) continue;
      std::istringstream fields(line);
      FrameEntry entry;
      std::string file;
      if (!(fields >> entry.timestamp >> file)) {
        throw Error(ErrorCode::DatasetError,
                    at_line(rgb_list, line_no) + ": expected 'timestamp filename'");
      }
      entry.frame_id = static_cast<std::int64_t>(frames_.size());
      entry.image = root_ / file;
      frames_.push_back(entry);
    }
  } else {
    throw Error(ErrorCode::DatasetError,
                root_.string() + " has neither features.txt nor rgb.txt");
  }
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (!(frames_[i].timestamp > frames_[i - 1].timestamp)) {
      throw Error(ErrorCode::DatasetError,
                  root_.string() + ": frame timestamps must increase (frame " +
                      std::to_string(frames_[i].frame_id) + ")");
    }
  }

  const fs::path gt = root_ / "groundtruth.txt";
  if (fs::exists(gt)) ground_truth_ = read_tum_trajectory(gt);

  const fs::path labels = root_ / "labels.txt";
  if (fs::exists(labels)) {
    std::map<std::int64_t, std::size_t> index_of;
    for (std::size_t i = 0; i < frames_.size(); ++i) index_of[frames_[i].frame_id] = i;
    labels_.resize(frames_.size());
    std::ifstream in(labels);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (skip_line(line)) continue;
      std::istringstream fields(line);
      std::int64_t frame_id = 0;
      std::size_t kp = 0;
      int flag = 0;
      if (!(fields >> frame_id >> kp >> flag) || (flag != 0 && flag != 1) ||
          !index_of.contains(frame_id)) {
        throw Error(ErrorCode::DatasetError, at_line(labels, line_no) + ": bad label record");
      }
      auto& row = labels_[index_of[frame_id]];
      if (kp != row.size()) {
        throw Error(ErrorCode::DatasetError,
                    at_line(labels, line_no) + ": keypoint indices must be listed in order");
      }
      row.push_back(flag == 1);
    }
  }
}

FrameData DiskDataset::load(std::size_t index) const {
  const FrameEntry& entry = frames_.at(index);
  FrameData out;
  if (entry.image.empty()) {
    const auto it = features_.find(entry.frame_id);
    if (it != features_.end()) out.features = it->second;
    out.features.frame_id = entry.frame_id;
  } else {
    if (!fs::exists(entry.image)) {
      throw Error(ErrorCode::DatasetError, "image " + entry.image.string() + " is missing");
    }
    out.features = detect_and_describe(detail::read_gray_png(entry.image), options_.extractor,
                                       entry.frame_id, entry.timestamp);
  }
  out.features.timestamp = entry.timestamp;

  const std::string stem = std::to_string(entry.frame_id);
  const fs::path png = masks_dir_ / (stem + ".png");
  const fs::path json = masks_dir_ / (stem + ".json");
  if (!fs::exists(png) || !fs::exists(json)) {
    throw Error(ErrorCode::DatasetError, "mask files for frame " + stem + " missing in " +
                                             masks_dir_.string());
  }
  out.panoptic = load_panoptic_frame(png, json, options_.panoptic);
  if (out.panoptic.frame_id() != entry.frame_id) {
    throw Error(ErrorCode::DatasetError,
                json.string() + " declares frame " + std::to_string(out.panoptic.frame_id()));
  }
  return out;
}

void write_sequence_dataset(const SyntheticSequence& sequence, const fs::path& root) {
  fs::create_directories(root / "masks");
  const auto& k = sequence.config.intrinsics;
  {
    auto out = open_out(root / "calibration.txt");
    out << "fx=" << format_g17(k.fx) << "\nfy=" << format_g17(k.fy) << "\ncx=" << format_g17(k.cx)
        << "\ncy=" << format_g17(k.cy) << "\nwidth=" << sequence.config.width
        << "\nheight=" << sequence.config.height << '\n';
  }
  std::vector<FeatureFrame> frames;
  {
    auto out = open_out(root / "frames.txt");
    auto labels = open_out(root / "labels.txt");
    out << "# frame_id timestamp\n";
    labels << "# frame_id keypoint_index dynamic\n";
    for (const auto& f : sequence.frames) {
      out << f.features.frame_id << ' ' << format_g17(f.features.timestamp) << '\n';
      for (std::size_t i = 0; i < f.dynamic.size(); ++i) {
        labels << f.features.frame_id << ' ' << i << ' ' << (f.dynamic[i] ? 1 : 0) << '\n';
      }
      frames.push_back(f.features);
      const std::string stem = std::to_string(f.features.frame_id);
      write_panoptic_frame(f.panoptic, root / "masks" / (stem + ".png"),
                           root / "masks" / (stem + ".json"));
    }
  }
  write_feature_file(root / "features.txt", frames);
  write_tum_trajectory(sequence.ground_truth, root / "groundtruth.txt");
}

}  // namespace dynfilter
