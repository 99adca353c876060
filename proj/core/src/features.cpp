#include "dynfilter/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "brief_pattern.hpp"
#include "dynfilter/error.hpp"

namespace dynfilter {
namespace {

constexpr int kMinImageSize = 64;
// Orientation patch radius plus the reach of a rotated BRIEF test.
constexpr int kPatchRadius = 15;
constexpr int kEdge = 19;
constexpr int kGridCells = 8;
constexpr int kArc = 9;

constexpr std::array<std::array<int, 2>, 16> kCircle = {{
    {0, 3}, {1, 3}, {2, 2}, {3, 1}, {3, 0}, {3, -1}, {2, -2}, {1, -3},
    {0, -3}, {-1, -3}, {-2, -2}, {-3, -1}, {-3, 0}, {-3, 1}, {-2, 2}, {-1, 3},
}};

struct Candidate {
  int x = 0;
  int y = 0;
  int score = 0;
};

GrayImage resize_bilinear(const GrayImage& src, int w, int h) {
  GrayImage dst(w, h);
  const double sx = static_cast<double>(src.width) / w;
  const double sy = static_cast<double>(src.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ay = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double ax = fx - x0;
      const double top = (1 - ax) * src.at(x0, y0) + ax * src.at(x1, y0);
      const double bottom = (1 - ax) * src.at(x0, y1) + ax * src.at(x1, y1);
      dst.at(x, y) = static_cast<std::uint8_t>(std::lround((1 - ay) * top + ay * bottom));
    }
  }
  return dst;
}

GrayImage gaussian_blur(const GrayImage& src) {
  // 7-tap binomial-like kernel, sigma ~ 2.
  constexpr std::array<double, 7> k = {0.0702, 0.1311, 0.1907, 0.2161, 0.1907, 0.1311, 0.0702};
  std::vector<double> tmp(src.pixels.size());
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -3; i <= 3; ++i) {
        const int xx = std::clamp(x + i, 0, src.width - 1);
        acc += k[i + 3] * src.at(xx, y);
      }
      tmp[static_cast<std::size_t>(y) * src.width + x] = acc;
    }
  }
  GrayImage dst(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      for (int i = -3; i <= 3; ++i) {
        const int yy = std::clamp(y + i, 0, src.height - 1);
        acc += k[i + 3] * tmp[static_cast<std::size_t>(yy) * src.width + x];
      }
      dst.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
  }
  return dst;
}

// Largest t such that the pixel still passes the segment test; 0 if not a
// corner at the given threshold.
int fast_score(const GrayImage& img, int x, int y, int threshold) {
  const int c = img.at(x, y);
  std::array<int, 16> diff{};
  for (int i = 0; i < 16; ++i) diff[i] = img.at(x + kCircle[i][0], y + kCircle[i][1]) - c;

  int best = 0;
  for (int start = 0; start < 16; ++start) {
    int min_bright = 255;
    int min_dark = 255;
    for (int j = 0; j < kArc; ++j) {
      const int d = diff[(start + j) % 16];
      min_bright = std::min(min_bright, d);
      min_dark = std::min(min_dark, -d);
    }
    best = std::max({best, min_bright, min_dark});
  }
  return best > threshold ? best : 0;
}

std::vector<Candidate> detect_fast(const GrayImage& img, int threshold) {
  const int w = img.width;
  const int h = img.height;
  std::vector<int> scores(static_cast<std::size_t>(w) * h, 0);
  for (int y = kEdge; y < h - kEdge; ++y) {
    for (int x = kEdge; x < w - kEdge; ++x) {
      // Cheap rejection on the four compass points: a 9-arc covers >= 2 of them.
      const int c = img.at(x, y);
      int bright = 0;
      int dark = 0;
      for (int i = 0; i < 16; i += 4) {
        const int p = img.at(x + kCircle[i][0], y + kCircle[i][1]);
        bright += p > c + threshold;
        dark += p < c - threshold;
      }
      if (bright < 2 && dark < 2) continue;
      scores[static_cast<std::size_t>(y) * w + x] = fast_score(img, x, y, threshold);
    }
  }

  std::vector<Candidate> out;
  for (int y = kEdge; y < h - kEdge; ++y) {
    for (int x = kEdge; x < w - kEdge; ++x) {
      const int s = scores[static_cast<std::size_t>(y) * w + x];
      if (s == 0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int n = scores[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          // Ties go to the earlier pixel in raster order.
          const bool before = dy < 0 || (dy == 0 && dx < 0);
          if (n > s || (before && n == s)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) out.push_back({x, y, s});
    }
  }
  return out;
}

std::vector<Candidate> bucket(std::vector<Candidate> candidates, int w, int h, int quota) {
  const int usable_w = w - 2 * kEdge;
  const int usable_h = h - 2 * kEdge;
  std::vector<std::vector<Candidate>> cells(kGridCells * kGridCells);
  for (const auto& c : candidates) {
    const int cx = std::min(kGridCells - 1, (c.x - kEdge) * kGridCells / usable_w);
    const int cy = std::min(kGridCells - 1, (c.y - kEdge) * kGridCells / usable_h);
    cells[static_cast<std::size_t>(cy) * kGridCells + cx].push_back(c);
  }
  for (auto& cell : cells) {
    std::sort(cell.begin(), cell.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.y != b.y) return a.y < b.y;
      return a.x < b.x;
    });
  }

  std::vector<Candidate> kept;
  std::size_t rank = 0;
  bool any = true;
  while (static_cast<int>(kept.size()) < quota && any) {
    any = false;
    for (const auto& cell : cells) {
      if (rank < cell.size()) {
        any = true;
        kept.push_back(cell[rank]);
        if (static_cast<int>(kept.size()) == quota) break;
      }
    }
    ++rank;
  }
  return kept;
}

double intensity_centroid_angle(const GrayImage& img, int x, int y) {
  double m01 = 0.0;
  double m10 = 0.0;
  for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy) {
    for (int dx = -kPatchRadius; dx <= kPatchRadius; ++dx) {
      if (dx * dx + dy * dy > kPatchRadius * kPatchRadius) continue;
      const double i = img.at(x + dx, y + dy);
      m10 += dx * i;
      m01 += dy * i;
    }
  }
  double angle = std::atan2(m01, m10);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  if (angle >= 2.0 * std::numbers::pi) angle = 0.0;
  return angle;
}

Descriptor steered_brief(const GrayImage& smooth, int x, int y, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Descriptor d;
  for (int i = 0; i < Descriptor::kBits; ++i) {
    const auto& t = detail::kBriefPattern[i];
    const auto rot = [&](int px, int py) {
      return std::array<int, 2>{static_cast<int>(std::lround(px * c - py * s)),
                                static_cast<int>(std::lround(px * s + py * c))};
    };
    const auto a = rot(t[0], t[1]);
    const auto b = rot(t[2], t[3]);
    d.set_bit(i, smooth.at(x + a[0], y + a[1]) < smooth.at(x + b[0], y + b[1]));
  }
  return d;
}

std::vector<int> features_per_level(const ExtractorParams& params, int levels) {
  std::vector<int> n(levels, 0);
  const double factor = 1.0 / params.scale_factor;
  double desired = params.n_features * (1.0 - factor) / (1.0 - std::pow(factor, levels));
  if (levels == 1 || params.scale_factor == 1.0) desired = params.n_features / double(levels);
  int total = 0;
  for (int l = 0; l < levels - 1; ++l) {
    n[l] = static_cast<int>(std::lround(desired));
    total += n[l];
    desired *= factor;
  }
  n[levels - 1] = std::max(0, params.n_features - total);
  return n;
}

}  // namespace

std::string Descriptor::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (int byte = 0; byte < 32; ++byte) {
    const auto v = static_cast<unsigned>((words_[byte / 8] >> (8 * (byte % 8))) & 0xffu);
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xfu]);
  }
  return out;
}

Descriptor Descriptor::from_hex(std::string_view hex) {
  if (hex.size() != 64) {
    throw Error(ErrorCode::FormatError,
                "descriptor must be 64 hex characters, got " + std::to_string(hex.size()));
  }
  const auto nibble = [](char ch) -> std::uint64_t {
    if (ch >= '0' && ch <= '9') return static_cast<std::uint64_t>(ch - '0');
    if (ch >= 'a' && ch <= 'f') return static_cast<std::uint64_t>(ch - 'a' + 10);
    if (ch >= 'A' && ch <= 'F') return static_cast<std::uint64_t>(ch - 'A' + 10);
    throw Error(ErrorCode::FormatError, std::string("invalid hex digit '") + ch + "'");
  };
  std::array<std::uint64_t, 4> words{};
  for (int byte = 0; byte < 32; ++byte) {
    const std::uint64_t v = (nibble(hex[2 * byte]) << 4) | nibble(hex[2 * byte + 1]);
    words[byte / 8] |= v << (8 * (byte % 8));
  }
  return Descriptor(words);
}

void FeatureFrame::validate() const {
  if (keypoints.size() != descriptors.size()) {
    throw Error(ErrorCode::FormatError, "frame " + std::to_string(frame_id) + " has " +
                                            std::to_string(keypoints.size()) + " keypoints but " +
                                            std::to_string(descriptors.size()) + " descriptors");
  }
}

FeatureFrame detect_and_describe(const GrayImage& image, const ExtractorParams& params,
                                 std::int64_t frame_id, double timestamp) {
  if (image.width < kMinImageSize || image.height < kMinImageSize) {
    throw Error(ErrorCode::ImageTooSmall, std::to_string(image.width) + "x" +
                                              std::to_string(image.height) + " is below 64x64");
  }
  if (params.n_levels < 1 || params.scale_factor < 1.0 || params.n_features < 0) {
    throw Error(ErrorCode::ConfigError, "invalid extractor parameters");
  }

  // Pyramid, truncated once a level has no room for a bordered patch.
  std::vector<GrayImage> pyramid{image};
  std::vector<double> scales{1.0};
  for (int l = 1; l < params.n_levels; ++l) {
    const double scale = std::pow(params.scale_factor, l);
    const int w = static_cast<int>(std::lround(image.width / scale));
    const int h = static_cast<int>(std::lround(image.height / scale));
    if (w < 2 * kEdge + kGridCells || h < 2 * kEdge + kGridCells) break;
    pyramid.push_back(resize_bilinear(pyramid.back(), w, h));
    scales.push_back(scale);
  }
  const auto quotas = features_per_level(params, static_cast<int>(pyramid.size()));

  FeatureFrame frame;
  frame.frame_id = frame_id;
  frame.timestamp = timestamp;

  struct Described {
    Keypoint kp;
    Descriptor desc;
  };
  std::vector<Described> all;
  for (std::size_t l = 0; l < pyramid.size(); ++l) {
    const GrayImage& level = pyramid[l];
    auto candidates = bucket(detect_fast(level, params.fast_threshold), level.width, level.height,
                             quotas[l]);
    if (candidates.empty()) continue;
    const GrayImage smooth = gaussian_blur(level);
    for (const auto& c : candidates) {
      Described d;
      d.kp.position = {c.x * scales[l], c.y * scales[l]};
      d.kp.octave = static_cast<int>(l);
      d.kp.angle = intensity_centroid_angle(level, c.x, c.y);
      d.kp.response = c.score;
      d.desc = steered_brief(smooth, c.x, c.y, d.kp.angle);
      all.push_back(d);
    }
  }

  std::sort(all.begin(), all.end(), [](const Described& a, const Described& b) {
    if (a.kp.octave != b.kp.octave) return a.kp.octave < b.kp.octave;
    if (a.kp.response != b.kp.response) return a.kp.response > b.kp.response;
    if (a.kp.position.u != b.kp.position.u) return a.kp.position.u < b.kp.position.u;
    return a.kp.position.v < b.kp.position.v;
  });
  for (const auto& d : all) {
    frame.keypoints.push_back(d.kp);
    frame.descriptors.push_back(d.desc);
  }
  return frame;
}

std::vector<Match> match_nearest_neighbor(const FeatureFrame& ref, const FeatureFrame& query,
                                          const MatchParams& params) {
  if (ref.empty() || query.empty()) {
    throw Error(ErrorCode::EmptyFrame, "cannot match against an empty frame");
  }
  ref.validate();
  query.validate();

  const std::size_t n = ref.size();
  const std::size_t m = query.size();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<std::size_t> best_query(n, kNone);
  std::vector<int> best_query_dist(n, Descriptor::kBits + 1);
  std::vector<std::size_t> best_ref(m, kNone);
  std::vector<int> best_ref_dist(m, Descriptor::kBits + 1);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const int d = hamming_distance(ref.descriptors[i], query.descriptors[j]);
      if (d < best_query_dist[i]) {
        best_query_dist[i] = d;
        best_query[i] = j;
      }
      if (d < best_ref_dist[j]) {
        best_ref_dist[j] = d;
        best_ref[j] = i;
      }
    }
  }

  std::vector<Match> matches;
  if (params.cross_check) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = best_query[i];
      if (best_query_dist[i] <= params.max_distance && best_ref[j] == i) {
        matches.push_back({i, j, best_query_dist[i]});
      }
    }
    return matches;
  }

  // Without cross-check a query descriptor may be claimed by several refs;
  // the closest claim (lowest ref index on ties) wins.
  std::vector<std::size_t> owner(m, kNone);
  for (std::size_t i = 0; i < n; ++i) {
    if (best_query_dist[i] > params.max_distance) continue;
    const std::size_t j = best_query[i];
    if (owner[j] == kNone || best_query_dist[i] < best_query_dist[owner[j]]) owner[j] = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (best_query_dist[i] > params.max_distance) continue;
    const std::size_t j = best_query[i];
    if (owner[j] == i) matches.push_back({i, j, best_query_dist[i]});
  }
  return matches;
}

std::map<std::int64_t, FeatureFrame> read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open feature file " + path.string());

  std::map<std::int64_t, FeatureFrame> frames;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream iss(line);
    std::int64_t frame_id = 0;
    Keypoint kp;
    std::string hex;
    if (!(iss >> frame_id >> kp.position.u >> kp.position.v >> kp.octave >> kp.angle >>
          kp.response >> hex)) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": malformed feature record");
    }
    std::string extra;
    if (iss >> extra) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": trailing tokens");
    }
    Descriptor desc;
    try {
      desc = Descriptor::from_hex(hex);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto& frame = frames[frame_id];
    frame.frame_id = frame_id;
    frame.keypoints.push_back(kp);
    frame.descriptors.push_back(desc);
  }
  return frames;
}

void write_feature_file(const std::filesystem::path& path,
                        const std::vector<FeatureFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write feature file " + path.string());
  out << "# frame_id u v octave angle response descriptor\n";
  char buf[256];
  for (const auto& frame : frames) {
    frame.validate();
    for (std::size_t i = 0; i < frame.size(); ++i) {
      const auto& kp = frame.keypoints[i];
      std::snprintf(buf, sizeof(buf), "%lld %.17g %.17g %d %.17g %.17g ",
                    static_cast<long long>(frame.frame_id), kp.position.u, kp.position.v,
                    kp.octave, kp.angle, kp.response);
      out << buf << frame.descriptors[i].to_hex() << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace dynfilter
