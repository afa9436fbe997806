#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/numeric.hpp"
#include "longlens/raster/image.hpp"
#include "longlens/registration/mixture.hpp"
#include "longlens/temporal.hpp"

namespace longlens {

using LevelLut = std::array<int, 256>;

inline int byte_level(double v) { return static_cast<int>(std::clamp(std::floor(v + 0.5), 0.0, 255.0)); }

/// Maps each source level to the reference level whose discrete CDF is
/// closest to the source CDF at that level (ties to the lower level).
inline LevelLut histogram_match_lut(const GrayImage& img, const ValidityMask& mask, const MixtureReference& ref) {
  if (!mask.same_shape(img)) throw DimensionError("histogram_match: mask shape differs from image");
  if (img.scale() != IntensityScale::Byte) throw ScaleError("histogram_match expects a Byte image");
  std::array<std::size_t, 256> counts{};
  std::size_t total = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!mask[i]) continue;
    ++counts[static_cast<std::size_t>(byte_level(img[i]))];
    ++total;
  }
  if (total == 0) throw EmptyMaskError("histogram_match: mask has no pixels");

  std::array<double, 256> ref_cdf{};
  for (int l = 0; l < 256; ++l) ref_cdf[static_cast<std::size_t>(l)] = ref.discrete_cdf(l);

  LevelLut lut{};
  std::size_t running = 0;
  for (int l = 0; l < 256; ++l) {
    running += counts[static_cast<std::size_t>(l)];
    const double target = static_cast<double>(running) / static_cast<double>(total);
    auto c = static_cast<std::size_t>(std::lower_bound(ref_cdf.begin(), ref_cdf.end(), target) - ref_cdf.begin());
    if (c == ref_cdf.size()) c = 255;
    if (c > 0 && target - ref_cdf[c - 1] <= ref_cdf[c] - target) --c;
    while (c > 0 && ref_cdf[c - 1] == ref_cdf[c]) --c;
    lut[static_cast<std::size_t>(l)] = static_cast<int>(c);
  }
  return lut;
}

inline GrayImage apply_lut(const GrayImage& img, const LevelLut& lut) {
  GrayImage out(img.width(), img.height(), IntensityScale::Byte);
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = lut[static_cast<std::size_t>(byte_level(img[i]))];
  return out;
}

inline GrayImage histogram_match(const GrayImage& img, const ValidityMask& mask, const MixtureReference& ref = default_mixture()) {
  return apply_lut(img, histogram_match_lut(img, mask, ref));
}

/// Left eyes are mirrored so every sequence shares the right-eye orientation.
inline EyeSequence normalize_chirality(const EyeSequence& seq) {
  if (seq.laterality == Laterality::Unknown) throw UnknownLateralityError("eye " + seq.eye_id + ": laterality unknown");
  if (seq.laterality == Laterality::Right) return seq;
  EyeSequence out = seq;
  for (auto& f : out.frames) {
    f.image = flip_horizontal(f.image);
    f.mask = flip_horizontal(f.mask);
  }
  out.laterality = Laterality::Right;
  return out;
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

/// Mirror index without repeating the edge sample (dcba|abcd|dcba).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace detail

/// Separable Gaussian blur, reflected borders, radius ceil(3 sigma).
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_blur: sigma must be positive");
  const auto k = detail::gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height();
  GrayImage tmp(w, h, img.scale());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) acc += k[static_cast<std::size_t>(d + r)] * img.at(detail::reflect_index(x + d, w), y);
      tmp.at(x, y) = acc;
    }
  GrayImage out(w, h, img.scale());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -r; d <= r; ++d) acc += k[static_cast<std::size_t>(d + r)] * tmp.at(x, detail::reflect_index(y + d, h));
      out.at(x, y) = acc;
    }
  return out;
}

/// Duplicate-frame contrast score: (P95 - P5) * stddev(blur(img, sigma)),
/// on the Byte scale.
inline double quality_score(const GrayImage& input, double sigma = 16.0) {
  if (input.empty()) throw DimensionError("quality_score: empty image");
  const GrayImage img = input.scale() == IntensityScale::Byte ? input : to_byte(input);
  std::vector<double> v = img.pixels();
  std::sort(v.begin(), v.end());
  const double spread = percentile_sorted(v, 0.95) - percentile_sorted(v, 0.05);
  const GrayImage blurred = gaussian_blur(img, sigma);
  CompensatedSum sum;
  for (double x : blurred.pixels()) sum += x;
  const double mean = sum.value() / static_cast<double>(blurred.size());
  CompensatedSum sq;
  for (double x : blurred.pixels()) sq += (x - mean) * (x - mean);
  return spread * std::sqrt(sq.value() / static_cast<double>(blurred.size()));
}

}  // namespace longlens
