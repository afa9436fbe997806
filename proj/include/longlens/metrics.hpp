#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/numeric.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

/// SSIM parameters. Windows are uniform (box) and statistics use population
/// (divide-by-n) moments.
struct SsimConfig {
  int window = 7;
  double data_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;

  /// Configuration for change maps, whose values span [-1, 1].
  static SsimConfig change_map() { return SsimConfig{7, 2.0, 0.01, 0.03}; }

  [[nodiscard]] double c1() const { return (k1 * data_range) * (k1 * data_range); }
  [[nodiscard]] double c2() const { return (k2 * data_range) * (k2 * data_range); }

  void validate() const {
    if (window < 3 || window % 2 == 0) throw ConfigError("SSIM window must be odd and >= 3");
    if (!(data_range > 0.0)) throw ConfigError("SSIM data_range must be positive");
    if (!(c1() > 0.0) || !(c2() > 0.0)) throw ConfigError("SSIM constants must be positive");
  }
};

namespace detail {

inline void require_same_shape(const GrayImage& a, const GrayImage& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionError(std::string(what) + ": image dimensions differ");
}

inline void require_pixel_inputs(const GrayImage& pred, const GrayImage& target, const ValidityMask& mask,
                                  const char* what) {
  require_same_shape(pred, target, what);
  if (!mask.same_shape(pred)) throw DimensionError(std::string(what) + ": mask dimensions differ");
  if (pred.scale() != target.scale()) throw ScaleError(std::string(what) + ": intensity scales differ");
  if (!mask.any()) throw EmptyMaskError(std::string(what) + ": mask has no valid pixels");
}

inline double masked_mse(const GrayImage& pred, const GrayImage& target, const ValidityMask& mask) {
  CompensatedSum sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double d = pred[i] - target[i];
    sum += d * d;
    ++n;
  }
  return sum.value() / static_cast<double>(n);
}

}  // namespace detail

/// Mean absolute error over valid pixels.
inline double mae(const GrayImage& pred, const GrayImage& target, const ValidityMask& mask) {
  detail::require_pixel_inputs(pred, target, mask, "mae");
  CompensatedSum sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    sum += std::abs(pred[i] - target[i]);
    ++n;
  }
  return sum.value() / static_cast<double>(n);
}

/// PSNR in dB over valid pixels. A perfect prediction returns +infinity;
/// aggregation code is expected to exclude and count those.
inline double psnr(const GrayImage& pred, const GrayImage& target, const ValidityMask& mask, double data_range = 1.0) {
  detail::require_pixel_inputs(pred, target, mask, "psnr");
  if (!(data_range > 0.0)) throw ConfigError("psnr: data_range must be positive");
  const double mse = detail::masked_mse(pred, target, mask);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

/// Mean SSIM over every window position lying fully inside `region`.
inline double ssim(const GrayImage& a, const GrayImage& b, const SsimConfig& cfg, const Rect& region) {
  cfg.validate();
  detail::require_same_shape(a, b, "ssim");
  if (!region.fits(a.width(), a.height())) throw DimensionError("ssim: region does not fit the images");
  if (region.width < cfg.window || region.height < cfg.window)
    throw RegionTooSmallError("ssim: region smaller than the window");

  const int win = cfg.window;
  const int out_w = region.width - win + 1;
  const int out_h = region.height - win + 1;
  const double n = static_cast<double>(win) * win;
  const double c1 = cfg.c1();
  const double c2 = cfg.c2();

  // Column sums over the current band of `win` rows, recomputed per band so
  // no running subtraction accumulates error.
  std::vector<double> sa(static_cast<std::size_t>(region.width)), sb(sa.size()), saa(sa.size()), sbb(sa.size()),
      sab(sa.size());
  CompensatedSum total;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int cx = 0; cx < region.width; ++cx) {
      double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
      for (int dy = 0; dy < win; ++dy) {
        const double va = a.at(region.x + cx, region.y + oy + dy);
        const double vb = b.at(region.x + cx, region.y + oy + dy);
        s1 += va;
        s2 += vb;
        s11 += va * va;
        s22 += vb * vb;
        s12 += va * vb;
      }
      const auto c = static_cast<std::size_t>(cx);
      sa[c] = s1;
      sb[c] = s2;
      saa[c] = s11;
      sbb[c] = s22;
      sab[c] = s12;
    }
    for (int ox = 0; ox < out_w; ++ox) {
      double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
      for (int dx = 0; dx < win; ++dx) {
        const auto c = static_cast<std::size_t>(ox + dx);
        s1 += sa[c];
        s2 += sb[c];
        s11 += saa[c];
        s22 += sbb[c];
        s12 += sab[c];
      }
      const double mu_a = s1 / n;
      const double mu_b = s2 / n;
      const double var_a = s11 / n - mu_a * mu_a;
      const double var_b = s22 / n - mu_b * mu_b;
      const double cov = s12 / n - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return total.value() / (static_cast<double>(out_w) * out_h);
}

/// SSIM restricted to the bounding box of `mask`.
inline double ssim(const GrayImage& a, const GrayImage& b, const SsimConfig& cfg, const ValidityMask& mask) {
  if (!mask.same_shape(a)) throw DimensionError("ssim: mask dimensions differ");
  return ssim(a, b, cfg, bounding_box(mask));
}

inline double ssim(const GrayImage& a, const GrayImage& b, const SsimConfig& cfg = {}) {
  return ssim(a, b, cfg, Rect{0, 0, a.width(), a.height()});
}

/// Ground-truth and predicted change relative to the most recent history frame.
struct ChangeMaps {
  GrayImage delta_gt;
  GrayImage delta_pred;
  Rect bbox;
};

inline ChangeMaps change_maps(const GrayImage& pred, const GrayImage& target, const GrayImage& last,
                              const ValidityMask& mask) {
  detail::require_same_shape(pred, target, "change_maps");
  detail::require_same_shape(pred, last, "change_maps");
  if (!mask.same_shape(pred)) throw DimensionError("change_maps: mask dimensions differ");
  if (pred.scale() != IntensityScale::Unit || target.scale() != IntensityScale::Unit ||
      last.scale() != IntensityScale::Unit) {
    throw ScaleError("change_maps: inputs must be Unit scale");
  }
  // Change maps carry signed values in [-1, 1]; the scale tag is nominal here.
  std::vector<double> gt(pred.size()), pr(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    gt[i] = target[i] - last[i];
    pr[i] = pred[i] - last[i];
  }
  return ChangeMaps{GrayImage(pred.width(), pred.height(), IntensityScale::Unit, std::move(gt)),
                    GrayImage(pred.width(), pred.height(), IntensityScale::Unit, std::move(pr)), bounding_box(mask)};
}

/// Change-map SSIM: SSIM between (pred - last) and (target - last) within the
/// mask's bounding box, with data range 2.
inline double delta_ssim(const GrayImage& pred, const GrayImage& target, const GrayImage& last,
                         const ValidityMask& mask, const SsimConfig& cfg = SsimConfig::change_map()) {
  if (cfg.data_range != 2.0) throw ConfigError("delta_ssim requires data_range == 2.0");
  const ChangeMaps maps = change_maps(pred, target, last, mask);
  return ssim(maps.delta_pred, maps.delta_gt, cfg, maps.bbox);
}

}  // namespace longlens
