#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "dynfilter/error.hpp"
#include "dynfilter/panoptic.hpp"
#include "png_io.hpp"

namespace dynfilter {
namespace {

using nlohmann::json;

struct SegmentSpec {
  int id = 0;
  int class_id = 0;
  std::string class_name;
  bool isthing = false;
  bool is_person = false;
  BoundingBox bbox;
};

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) {
    throw Error(ErrorCode::FormatError, where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, where + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

PanopticFrame load_panoptic_frame(const std::filesystem::path& label_map,
                                  const std::filesystem::path& sidecar,
                                  const PanopticLoadOptions& options) {
  std::ifstream in(sidecar);
  if (!in) throw Error(ErrorCode::IoError, "cannot open sidecar " + sidecar.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, sidecar.string() + ": " + e.what());
  }
  const std::string where = sidecar.string();
  if (!doc.is_object()) throw Error(ErrorCode::FormatError, where + ": expected a JSON object");

  const auto frame_id = require<std::int64_t>(doc, "frame_id", where);
  const int width = require<int>(doc, "width", where);
  const int height = require<int>(doc, "height", where);
  if (!doc.contains("segments") || !doc["segments"].is_array()) {
    throw Error(ErrorCode::FormatError, where + ": 'segments' must be an array");
  }

  std::vector<SegmentSpec> specs;
  std::map<int, std::size_t> by_id;
  for (const auto& seg : doc["segments"]) {
    SegmentSpec s;
    s.id = require<int>(seg, "id", where);
    s.class_id = require<int>(seg, "class_id", where);
    s.class_name = require<std::string>(seg, "class_name", where);
    s.isthing = require<bool>(seg, "isthing", where);
    s.is_person = seg.value("is_person", false) ||
                  std::find(options.person_classes.begin(), options.person_classes.end(),
                            s.class_name) != options.person_classes.end();
    if (seg.contains("bbox")) {
      const auto box = require<std::vector<int>>(seg, "bbox", where);
      if (box.size() != 4) {
        throw Error(ErrorCode::FormatError, where + ": bbox must have 4 entries");
      }
      s.bbox = BoundingBox{box[0], box[1], box[2], box[3]};
    }
    if (s.id <= 0 || s.id > 0xffff) {
      throw Error(ErrorCode::FormatError,
                  where + ": segment id " + std::to_string(s.id) + " outside 1..65535");
    }
    if (!by_id.emplace(s.id, specs.size()).second) {
      throw Error(ErrorCode::PartitionError,
                  where + ": segment id " + std::to_string(s.id) + " declared twice");
    }
    specs.push_back(s);
  }

  const detail::LabelImage labels = detail::read_label_png(label_map);
  if (labels.width != width || labels.height != height) {
    throw Error(ErrorCode::FormatError, label_map.string() + " is " +
                                            std::to_string(labels.width) + "x" +
                                            std::to_string(labels.height) + " but sidecar says " +
                                            std::to_string(width) + "x" + std::to_string(height));
  }

  std::vector<Mask> masks(specs.size(), Mask(width, height));
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const std::uint16_t id = labels.labels[static_cast<std::size_t>(v) * width + u];
      if (id == 0) continue;
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::FormatError,
                    label_map.string() + ": undeclared segment id " + std::to_string(id));
      }
      masks[it->second].set(u, v);
    }
  }

  std::vector<ThingInstance> things;
  std::vector<StuffRegion> stuff;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (!masks[i].any()) {
      throw Error(ErrorCode::FormatError,
                  where + ": segment " + std::to_string(s.id) + " covers no pixels");
    }
    if (s.isthing) {
      ThingInstance t;
      t.instance_id = s.id;
      t.class_id = s.class_id;
      t.class_name = s.class_name;
      t.is_person = s.is_person;
      t.bbox = s.bbox;
      t.mask = std::move(masks[i]);
      things.push_back(std::move(t));
    } else {
      stuff.push_back(StuffRegion{s.class_id, s.class_name, std::move(masks[i])});
    }
  }
  return PanopticFrame::create(frame_id, width, height, std::move(things), std::move(stuff));
}

void write_panoptic_frame(const PanopticFrame& frame, const std::filesystem::path& label_map,
                          const std::filesystem::path& sidecar) {
  detail::LabelImage labels;
  labels.width = frame.width();
  labels.height = frame.height();
  labels.labels.assign(static_cast<std::size_t>(frame.width()) * frame.height(), 0);

  json segments = json::array();
  int max_id = 0;
  const auto paint = [&](const Mask& mask, int id) {
    for (int v = 0; v < frame.height(); ++v) {
      for (int u = 0; u < frame.width(); ++u) {
        if (mask.test(u, v)) {
          labels.labels[static_cast<std::size_t>(v) * frame.width() + u] =
              static_cast<std::uint16_t>(id);
        }
      }
    }
  };
  for (const auto& t : frame.things()) {
    if (t.instance_id <= 0 || t.instance_id > 0xffff) {
      throw Error(ErrorCode::FormatError,
                  "instance id " + std::to_string(t.instance_id) + " not representable");
    }
    max_id = std::max(max_id, t.instance_id);
  }
  for (const auto& t : frame.things()) {
    paint(t.mask, t.instance_id);
    segments.push_back({{"id", t.instance_id},
                        {"class_id", t.class_id},
                        {"class_name", t.class_name},
                        {"isthing", true},
                        {"is_person", t.is_person},
                        {"bbox", {t.bbox.u_min, t.bbox.v_min, t.bbox.u_max, t.bbox.v_max}}});
  }
  int next_id = max_id + 1;
  for (const auto& s : frame.stuff()) {
    if (next_id > 0xffff) throw Error(ErrorCode::FormatError, "too many segments for 16 bits");
    const BoundingBox box = s.mask.bounding_box();
    paint(s.mask, next_id);
    segments.push_back({{"id", next_id},
                        {"class_id", s.class_id},
                        {"class_name", s.class_name},
                        {"isthing", false},
                        {"is_person", false},
                        {"bbox", {box.u_min, box.v_min, box.u_max, box.v_max}}});
    ++next_id;
  }

  detail::write_label_png(label_map, labels);

  json doc = {{"frame_id", frame.frame_id()},
              {"width", frame.width()},
              {"height", frame.height()},
              {"segments", segments}};
  std::ofstream out(sidecar);
  if (!out) throw Error(ErrorCode::IoError, "cannot write sidecar " + sidecar.string());
  out << doc.dump() << '\n';
}

}  // namespace dynfilter
