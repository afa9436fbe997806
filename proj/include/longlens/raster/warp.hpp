#pragma once

#include <cmath>
#include <utility>

#include "longlens/geometry/transform.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

namespace detail {

// Sample positions within this distance of an integer are snapped to it, so
// exact integer maps (identity, integer shifts, right-angle rotations) reproduce
// source pixels bit for bit instead of picking up 1e-16 interpolation noise.
inline constexpr double kSnapTolerance = 1e-9;

inline double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnapTolerance ? r : v;
}

/// Bilinear sample at pixel-center coordinates; positions outside
/// [0, w-1] x [0, h-1] return 0.
template <typename Fetch>
double sample_bilinear(Fetch&& fetch, int w, int h, double u, double v) {
  u = snap(u);
  v = snap(v);
  if (!(u >= 0.0 && v >= 0.0 && u <= w - 1 && v <= h - 1)) return 0.0;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0;
  const double fy = v - y0;
  double acc = (1.0 - fx) * (1.0 - fy) * fetch(x0, y0);
  if (fx > 0.0) acc += fx * (1.0 - fy) * fetch(x0 + 1, y0);
  if (fy > 0.0) acc += (1.0 - fx) * fy * fetch(x0, y0 + 1);
  if (fx > 0.0 && fy > 0.0) acc += fx * fy * fetch(x0 + 1, y0 + 1);
  return acc;
}

template <typename Fetch, typename Store>
void warp_inverse_map(const Eigen::Matrix3d& forward, int src_w, int src_h, int out_w, int out_h, Fetch&& fetch,
                      Store&& store) {
  require_invertible(forward);
  const Eigen::Matrix3d inv = forward.inverse();
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Point2d src = TransformModel::apply_matrix(inv, {static_cast<double>(x), static_cast<double>(y)});
      store(x, y, sample_bilinear(fetch, src_w, src_h, src.x, src.y));
    }
  }
}

}  // namespace detail

/// Resamples `img` into an out_w x out_h raster. The transform maps source
/// coordinates to output coordinates; each output pixel is pulled through the
/// inverse. Byte images are rounded back to integral levels.
inline GrayImage warp_bilinear(const GrayImage& img, const TransformModel& transform, std::pair<int, int> out_size) {
  const auto [out_w, out_h] = out_size;
  GrayImage out(out_w, out_h, img.scale());
  const bool round_levels = img.scale() == IntensityScale::Byte;
  detail::warp_inverse_map(
      transform.matrix, img.width(), img.height(), out_w, out_h, [&](int x, int y) { return img.at(x, y); },
      [&](int x, int y, double v) {
        out.at(x, y) = round_levels ? std::clamp(std::floor(v + 0.5), 0.0, 255.0) : std::clamp(v, 0.0, 1.0);
      });
  return out;
}

/// Warps a mask as a 0/1 float field and rebinarizes with a strict > 0.5.
inline ValidityMask warp_mask(const ValidityMask& mask, const TransformModel& transform, std::pair<int, int> out_size) {
  const auto [out_w, out_h] = out_size;
  ValidityMask out(out_w, out_h);
  detail::warp_inverse_map(
      transform.matrix, mask.width(), mask.height(), out_w, out_h,
      [&](int x, int y) { return mask.at(x, y) ? 1.0 : 0.0; },
      [&](int x, int y, double v) { out.set(x, y, v > 0.5); });
  return out;
}

}  // namespace longlens
