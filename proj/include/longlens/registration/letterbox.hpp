#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "longlens/error.hpp"
#include "longlens/geometry/hull.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

inline constexpr int kModelSpaceSize = 1024;

/// Parameters of an aspect-preserving resize plus centered zero padding.
/// Pixel centers map as model = (crop + 0.5) * scale - 0.5 + pad.
struct LetterboxParams {
  double scale = 1.0;
  int pad_x = 0;
  int pad_y = 0;
  int model_size = kModelSpaceSize;

  [[nodiscard]] Point2d to_model(const Point2d& crop) const {
    return {(crop.x + 0.5) * scale - 0.5 + pad_x, (crop.y + 0.5) * scale - 0.5 + pad_y};
  }
  [[nodiscard]] Point2d to_crop(const Point2d& model) const {
    return {(model.x - pad_x + 0.5) / scale - 0.5, (model.y - pad_y + 0.5) / scale - 0.5};
  }
  /// Homogeneous matrix of to_model.
  [[nodiscard]] Eigen::Matrix3d crop_to_model() const {
    Eigen::Matrix3d b = Eigen::Matrix3d::Identity();
    b(0, 0) = scale;
    b(1, 1) = scale;
    b(0, 2) = 0.5 * scale - 0.5 + pad_x;
    b(1, 2) = 0.5 * scale - 0.5 + pad_y;
    return b;
  }
};

struct Letterboxed {
  GrayImage image;
  LetterboxParams params;
};

inline LetterboxParams letterbox_params(int width, int height, int model_size = kModelSpaceSize) {
  if (width < 2 || height < 2) throw DimensionError("letterbox: image must be at least 2x2");
  LetterboxParams p;
  p.model_size = model_size;
  p.scale = static_cast<double>(model_size) / std::max(width, height);
  const int new_w = std::min(model_size, static_cast<int>(std::lround(width * p.scale)));
  const int new_h = std::min(model_size, static_cast<int>(std::lround(height * p.scale)));
  p.pad_x = (model_size - new_w) / 2;
  p.pad_y = (model_size - new_h) / 2;
  return p;
}

/// Bilinear letterbox into a model_size square. Content samples clamp to the
/// source border; padding is zero.
inline Letterboxed letterbox(const GrayImage& img, int model_size = kModelSpaceSize) {
  const LetterboxParams p = letterbox_params(img.width(), img.height(), model_size);
  const int new_w = static_cast<int>(std::lround(img.width() * p.scale));
  const int new_h = static_cast<int>(std::lround(img.height() * p.scale));
  GrayImage out(model_size, model_size, img.scale());
  if (p.scale == 1.0 && img.width() == model_size && img.height() == model_size) {
    out = img;
    return {out, p};
  }
  for (int y = p.pad_y; y < p.pad_y + new_h; ++y) {
    const double sy = std::clamp(p.to_crop({0.0, static_cast<double>(y)}).y, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = sy - y0;
    for (int x = p.pad_x; x < p.pad_x + new_w; ++x) {
      const double sx = std::clamp(p.to_crop({static_cast<double>(x), 0.0}).x, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = sx - x0;
      const double v = (1 - fx) * (1 - fy) * img.at(x0, y0) + fx * (1 - fy) * img.at(x1, y0) +
                       (1 - fx) * fy * img.at(x0, y1) + fx * fy * img.at(x1, y1);
      out.at(x, y) = img.scale() == IntensityScale::Byte ? std::clamp(std::floor(v + 0.5), 0.0, 255.0) : v;
    }
  }
  return {out, p};
}

/// Re-expresses a model-space transform (moving -> fixed) in crop
/// coordinates of the two original images.
inline Eigen::Matrix3d model_to_crop_transform(const Eigen::Matrix3d& model_h, const LetterboxParams& moving,
                                               const LetterboxParams& fixed) {
  Eigen::Matrix3d h = fixed.crop_to_model().inverse() * model_h * moving.crop_to_model();
  return h / h(2, 2);
}

}  // namespace longlens
