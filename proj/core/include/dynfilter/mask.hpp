#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace dynfilter {

/// Inclusive pixel bounds.
struct BoundingBox {
  int u_min = 0;
  int v_min = 0;
  int u_max = -1;
  int v_max = -1;

  bool empty() const { return u_max < u_min || v_max < v_min; }
  bool contains(int u, int v) const { return u >= u_min && u <= u_max && v >= v_min && v <= v_max; }
  bool contains(const BoundingBox& other) const;
  /// Positive-area overlap of two boxes.
  bool overlaps(const BoundingBox& other) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Image-sized bitmap, one bit per pixel, packed in 64-bit words.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  bool test(int u, int v) const {
    const std::size_t i = index(u, v);
    return (bits_[i / 64] >> (i % 64)) & 1u;
  }
  void set(int u, int v, bool value = true) {
    const std::size_t i = index(u, v);
    const std::uint64_t m = std::uint64_t{1} << (i % 64);
    if (value) {
      bits_[i / 64] |= m;
    } else {
      bits_[i / 64] &= ~m;
    }
  }

  std::size_t count() const;
  bool any() const;
  bool same_shape(const Mask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  /// Tight bounds of the set bits; empty box for an empty mask.
  BoundingBox bounding_box() const;

  /// Set operations; all throw DimensionMismatch on shape disagreement.
  Mask operator&(const Mask& other) const;
  Mask operator|(const Mask& other) const;
  Mask& operator|=(const Mask& other);
  Mask operator~() const;
  std::size_t intersection_count(const Mask& other) const;
  std::size_t union_count(const Mask& other) const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }
  void check_shape(const Mask& other) const;
  void clear_padding();

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> bits_;
};

}  // namespace dynfilter
