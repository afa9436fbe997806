#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "longlens/atrophy/dip.hpp"
#include "longlens/error.hpp"
#include "longlens/numeric.hpp"
#include "longlens/raster/components.hpp"
#include "longlens/raster/image.hpp"
#include "longlens/raster/morphology.hpp"

namespace longlens {

/// Adaptive-threshold atrophy segmentation parameters. Intensity constants are
/// on the Byte scale.
struct SegParams {
  double sigma_coef = 1.5;
  double cap_frac = 0.70;
  double roi_radius_frac = 0.40;
  double seed_radius_frac = 0.15;
  std::size_t min_component_px = 20;
  double fundus_floor = 10.0;
  double threshold_floor = 1.0;
  int morph_size = 5;  // odd; elliptical element morph_size x morph_size
  Connectivity connectivity = Connectivity::Eight;
  /// When set, the dip statistic of the ROI fundus intensities is computed
  /// and compared with this value to flag bimodal histograms.
  std::optional<double> bimodality_dip_threshold;

  void validate() const {
    if (!(cap_frac > 0.0 && cap_frac < 1.0)) throw ConfigError("cap_frac must lie in (0, 1)");
    if (!(seed_radius_frac > 0.0 && seed_radius_frac < roi_radius_frac && roi_radius_frac < 0.5))
      throw ConfigError("need 0 < seed_radius_frac < roi_radius_frac < 0.5");
    if (!(sigma_coef > 0.0)) throw ConfigError("sigma_coef must be positive");
    if (morph_size < 1 || morph_size % 2 == 0) throw ConfigError("morph_size must be odd");
  }
};

/// t = max(min(mu - k sigma, cap * mu), floor)
inline double atrophy_threshold(double mu, double sigma, const SegParams& p) {
  return std::max(std::min(mu - p.sigma_coef * sigma, p.cap_frac * mu), p.threshold_floor);
}

/// Disc centered on the image center ((w-1)/2, (h-1)/2) with radius
/// radius_frac * min(w, h); boundary pixels are included.
inline ValidityMask centered_disc(int width, int height, double radius_frac) {
  ValidityMask m(width, height);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double r = radius_frac * std::min(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.set(x, y, (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r);
  return m;
}

struct SegmentationResult {
  ValidityMask mask;
  double threshold = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t fundus_pixels = 0;
  std::optional<double> dip;
  bool bimodality_warning = false;
};

/// Full segmentation pipeline with intermediate statistics. Unit-scale input
/// is converted to Byte first (x255, round half up).
inline SegmentationResult segment_atrophy_detailed(const GrayImage& input, const SegParams& params = {}) {
  params.validate();
  const GrayImage img = input.scale() == IntensityScale::Byte ? input : to_byte(input);
  const int w = img.width();
  const int h = img.height();
  const ValidityMask roi = centered_disc(w, h, params.roi_radius_frac);
  const ValidityMask seed = centered_disc(w, h, params.seed_radius_frac);

  SegmentationResult res;
  std::vector<double> fundus;
  CompensatedSum sum;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (roi[i] && img[i] > params.fundus_floor) {
      fundus.push_back(img[i]);
      sum += img[i];
    }
  }
  if (fundus.empty()) throw NoFundusPixelsError("no ROI pixel exceeds the fundus floor");
  res.fundus_pixels = fundus.size();
  res.mu = sum.value() / static_cast<double>(fundus.size());
  CompensatedSum ss;
  for (double v : fundus) ss += (v - res.mu) * (v - res.mu);
  res.sigma = std::sqrt(ss.value() / static_cast<double>(fundus.size()));
  res.threshold = atrophy_threshold(res.mu, res.sigma, params);

  if (params.bimodality_dip_threshold) {
    res.dip = dip_statistic(fundus);
    res.bimodality_warning = *res.dip > *params.bimodality_dip_threshold;
  }

  ValidityMask candidate(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) candidate.set(i, roi[i] && img[i] < res.threshold);

  // Morphology runs on the full frame; the result is clipped back to the ROI.
  const auto se = StructuringElement::ellipse(params.morph_size, params.morph_size);
  ValidityMask cleaned = candidate;
  if (se.width() <= w && se.height() <= h) {
    cleaned = morphology(morphology(candidate, se, MorphOp::Close), se, MorphOp::Open);
  }
  cleaned = mask_and(cleaned, roi);

  res.mask = ValidityMask(w, h);
  for (const auto& comp : connected_components(cleaned, params.connectivity)) {
    if (comp.area < params.min_component_px) break;  // sorted by area, descending
    const bool touches_seed =
        std::any_of(comp.pixels.begin(), comp.pixels.end(), [&](std::size_t idx) { return seed[idx]; });
    if (!touches_seed) continue;
    for (std::size_t idx : comp.pixels) res.mask.set(idx);
  }
  return res;
}

inline ValidityMask segment_atrophy(const GrayImage& img, const SegParams& params = {}) {
  return segment_atrophy_detailed(img, params).mask;
}

}  // namespace longlens
