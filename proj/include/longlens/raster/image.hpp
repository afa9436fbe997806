#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "longlens/error.hpp"

namespace longlens {

enum class IntensityScale { Unit, Byte };

inline double scale_max(IntensityScale s) { return s == IntensityScale::Unit ? 1.0 : 255.0; }

/// Axis-aligned pixel rectangle, half-open: columns [x, x + width).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  [[nodiscard]] bool fits(int w, int h) const {
    return x >= 0 && y >= 0 && width >= 0 && height >= 0 && x + width <= w && y + height <= h;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Single-channel raster. Pixels are row-major doubles; the scale tag says
/// whether they live in [0, 1] or [0, 255].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, IntensityScale scale = IntensityScale::Unit, double fill = 0.0)
      : width_(width), height_(height), scale_(scale) {
    if (width < 0 || height < 0) throw DimensionError("negative image dimensions");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  GrayImage(int width, int height, IntensityScale scale, std::vector<double> pixels)
      : width_(width), height_(height), scale_(scale), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw DimensionError("pixel count does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::size_t size() const { return pixels_.size(); }
  [[nodiscard]] IntensityScale scale() const { return scale_; }
  [[nodiscard]] bool empty() const { return pixels_.empty(); }

  [[nodiscard]] double at(int x, int y) const { return pixels_[index(x, y)]; }
  double& at(int x, int y) { return pixels_[index(x, y)]; }
  [[nodiscard]] double operator[](std::size_t i) const { return pixels_[i]; }
  double& operator[](std::size_t i) { return pixels_[i]; }

  [[nodiscard]] const std::vector<double>& pixels() const { return pixels_; }
  std::vector<double>& pixels() { return pixels_; }

  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  [[nodiscard]] bool same_shape(const GrayImage& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  IntensityScale scale_ = IntensityScale::Unit;
  std::vector<double> pixels_;
};

/// Binary raster marking valid pixels.
class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int width, int height, bool fill = false) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DimensionError("negative mask dimensions");
    bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
  }

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] std::size_t size() const { return bits_.size(); }

  [[nodiscard]] bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  [[nodiscard]] bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }

  /// Reads outside the raster return false.
  [[nodiscard]] bool get_or_false(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && at(x, y);
  }

  [[nodiscard]] std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  [[nodiscard]] bool any() const {
    return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
  }

  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  [[nodiscard]] bool same_shape(const ValidityMask& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }
  [[nodiscard]] bool same_shape(const GrayImage& img) const {
    return width_ == img.width() && height_ == img.height();
  }

  [[nodiscard]] const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const ValidityMask&, const ValidityMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline ValidityMask full_mask(int width, int height) { return ValidityMask(width, height, true); }

inline ValidityMask mask_and(const ValidityMask& a, const ValidityMask& b) {
  if (!a.same_shape(b)) throw DimensionError("mask_and: shape mismatch");
  ValidityMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] && b[i]);
  return out;
}

inline ValidityMask mask_not(const ValidityMask& a) {
  ValidityMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, !a[i]);
  return out;
}

/// Tight bounding box of the true pixels.
inline Rect bounding_box(const ValidityMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw EmptyMaskError("bounding box of an empty mask");
  return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// Byte <-> Unit conversions. Byte conversion rounds half up and clamps, so
// byte -> unit -> byte is the identity on integral byte values.
inline double unit_to_byte_value(double v) {
  return std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0);
}

inline GrayImage to_unit(const GrayImage& img) {
  if (img.scale() == IntensityScale::Unit) return img;
  std::vector<double> px(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) px[i] = img[i] / 255.0;
  return GrayImage(img.width(), img.height(), IntensityScale::Unit, std::move(px));
}

inline GrayImage to_byte(const GrayImage& img) {
  std::vector<double> px(img.size());
  if (img.scale() == IntensityScale::Byte) {
    for (std::size_t i = 0; i < img.size(); ++i) px[i] = std::clamp(std::floor(img[i] + 0.5), 0.0, 255.0);
  } else {
    for (std::size_t i = 0; i < img.size(); ++i) px[i] = unit_to_byte_value(img[i]);
  }
  return GrayImage(img.width(), img.height(), IntensityScale::Byte, std::move(px));
}

/// Checks the scale invariant: every value inside the declared range.
inline bool within_scale(const GrayImage& img) {
  const double hi = scale_max(img.scale());
  return std::all_of(img.pixels().begin(), img.pixels().end(),
                     [hi](double v) { return v >= 0.0 && v <= hi; });
}

inline GrayImage flip_horizontal(const GrayImage& img) {
  GrayImage out(img.width(), img.height(), img.scale());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(img.width() - 1 - x, y) = img.at(x, y);
  return out;
}

inline ValidityMask flip_horizontal(const ValidityMask& m) {
  ValidityMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.set(m.width() - 1 - x, y, m.at(x, y));
  return out;
}

/// Centered crop keeping `fraction` of each dimension (rounded to nearest pixel).
inline Rect center_crop_rect(int width, int height, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("crop fraction must be in (0, 1]");
  const int w = std::max(1, static_cast<int>(std::lround(width * fraction)));
  const int h = std::max(1, static_cast<int>(std::lround(height * fraction)));
  return Rect{(width - w) / 2, (height - h) / 2, w, h};
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
  if (!r.fits(img.width(), img.height())) throw DimensionError("crop rectangle outside image");
  GrayImage out(r.width, r.height, img.scale());
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
  return out;
}

inline ValidityMask crop(const ValidityMask& m, const Rect& r) {
  if (!r.fits(m.width(), m.height())) throw DimensionError("crop rectangle outside mask");
  ValidityMask out(r.width, r.height);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) out.set(x, y, m.at(r.x + x, r.y + y));
  return out;
}

}  // namespace longlens
