#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dynfilter/geometry.hpp"

namespace dynfilter {

/// 8-bit single-channel image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// 256-bit binary descriptor.
class Descriptor {
 public:
  static constexpr int kBits = 256;

  Descriptor() = default;
  explicit Descriptor(const std::array<std::uint64_t, 4>& words) : words_(words) {}

  bool bit(int i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set_bit(int i, bool value) {
    const std::uint64_t m = std::uint64_t{1} << (i % 64);
    if (value) {
      words_[i / 64] |= m;
    } else {
      words_[i / 64] &= ~m;
    }
  }
  void flip_bit(int i) { words_[i / 64] ^= std::uint64_t{1} << (i % 64); }

  const std::array<std::uint64_t, 4>& words() const { return words_; }

  /// 64 lowercase hex characters; byte k holds bits 8k..8k+7 and is written
  /// high nibble first, byte 0 leftmost.
  std::string to_hex() const;
  /// Throws FormatError on anything but 64 hex characters.
  static Descriptor from_hex(std::string_view hex);

  friend bool operator==(const Descriptor&, const Descriptor&) = default;

 private:
  std::array<std::uint64_t, 4> words_{};
};

struct Keypoint {
  PixelPoint position;  // level-0 pixel coordinates
  int octave = 0;
  double angle = 0.0;  // radians in [0, 2*pi)
  double response = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct FeatureFrame {
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;

  std::size_t size() const { return keypoints.size(); }
  bool empty() const { return keypoints.empty(); }
  /// Throws FormatError when keypoints and descriptors disagree in length.
  void validate() const;
};

struct Match {
  std::size_t ref_index = 0;
  std::size_t query_index = 0;
  int distance = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct ExtractorParams {
  int n_features = 500;
  int n_levels = 8;
  double scale_factor = 1.2;
  int fast_threshold = 20;
};

struct MatchParams {
  int max_distance = 64;
  bool cross_check = true;
};

inline int hamming_distance(const Descriptor& a, const Descriptor& b) {
  int d = 0;
  for (int w = 0; w < 4; ++w) d += std::popcount(a.words()[w] ^ b.words()[w]);
  return d;
}

/// FAST-9 on a scale pyramid, 8x8 grid bucketing per level, intensity-centroid
/// orientation and rotated BRIEF. Output sorted by octave, response
/// (descending), u, v. Throws ImageTooSmall below 64x64.
FeatureFrame detect_and_describe(const GrayImage& image, const ExtractorParams& params,
                                 std::int64_t frame_id = 0, double timestamp = 0.0);

/// Brute-force nearest neighbour from each ref descriptor into query. Every
/// query index is used at most once. Sorted by ref_index. Throws EmptyFrame.
std::vector<Match> match_nearest_neighbor(const FeatureFrame& ref, const FeatureFrame& query,
                                          const MatchParams& params);

/// Precomputed feature file: `frame_id u v octave angle response hex` per
/// keypoint. Frames come back keyed by id with timestamp 0.
std::map<std::int64_t, FeatureFrame> read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path,
                        const std::vector<FeatureFrame>& frames);

}  // namespace dynfilter
