#include "dynfilter/mask.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "dynfilter/error.hpp"

namespace dynfilter {

bool BoundingBox::contains(const BoundingBox& other) const {
  if (other.empty()) return true;
  return other.u_min >= u_min && other.u_max <= u_max && other.v_min >= v_min &&
         other.v_max <= v_max;
}

bool BoundingBox::overlaps(const BoundingBox& other) const {
  if (empty() || other.empty()) return false;
  return std::max(u_min, other.u_min) <= std::min(u_max, other.u_max) &&
         std::max(v_min, other.v_min) <= std::min(v_max, other.v_max);
}

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::DimensionMismatch, "negative mask dimensions");
  }
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  bits_.assign((n + 63) / 64, 0);
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool Mask::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint64_t w) { return w != 0; });
}

BoundingBox Mask::bounding_box() const {
  BoundingBox box{width_, height_, -1, -1};
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) {
      if (!test(u, v)) continue;
      box.u_min = std::min(box.u_min, u);
      box.v_min = std::min(box.v_min, v);
      box.u_max = std::max(box.u_max, u);
      box.v_max = std::max(box.v_max, v);
    }
  }
  if (box.u_max < 0) return BoundingBox{};
  return box;
}

void Mask::check_shape(const Mask& other) const {
  if (!same_shape(other)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(width_) + "x" + std::to_string(height_) + " vs " +
                    std::to_string(other.width_) + "x" + std::to_string(other.height_));
  }
}

void Mask::clear_padding() {
  const std::size_t n = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  if (n % 64 != 0 && !bits_.empty()) {
    bits_.back() &= (std::uint64_t{1} << (n % 64)) - 1;
  }
}

Mask Mask::operator&(const Mask& other) const {
  check_shape(other);
  Mask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] &= other.bits_[i];
  return out;
}

Mask Mask::operator|(const Mask& other) const {
  Mask out = *this;
  out |= other;
  return out;
}

Mask& Mask::operator|=(const Mask& other) {
  check_shape(other);
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

Mask Mask::operator~() const {
  Mask out = *this;
  for (auto& w : out.bits_) w = ~w;
  out.clear_padding();
  return out;
}

std::size_t Mask::intersection_count(const Mask& other) const {
  check_shape(other);
  std::size_t c = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    c += static_cast<std::size_t>(std::popcount(bits_[i] & other.bits_[i]));
  }
  return c;
}

std::size_t Mask::union_count(const Mask& other) const {
  check_shape(other);
  std::size_t c = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    c += static_cast<std::size_t>(std::popcount(bits_[i] | other.bits_[i]));
  }
  return c;
}

}  // namespace dynfilter
