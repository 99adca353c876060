#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dynfilter/features.hpp"

namespace dynfilter::detail {

struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> labels;
};

/// Single-channel 8- or 16-bit PNG as segment ids. Throws FormatError.
LabelImage read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelImage& image);

/// Any PNG converted to 8-bit luma. Throws FormatError.
GrayImage read_gray_png(const std::filesystem::path& path);
void write_gray_png(const std::filesystem::path& path, const GrayImage& image);

}  // namespace dynfilter::detail
