#pragma once

#include "longlens/error.hpp"
#include "longlens/raster/components.hpp"
#include "longlens/raster/convex_hull.hpp"
#include "longlens/raster/image.hpp"
#include "longlens/raster/morphology.hpp"

namespace longlens {

struct FovParams {
  double intensity_threshold = 2.0;  // Byte scale, strict >
  int close_size = 51;               // elliptical closing element
};

/// Usable-field mask: low threshold, elliptical closing, largest 8-connected
/// component, convex hull fill. The hull keeps dark structures inside the
/// field (optic disc, vessels, lesions) in the mask.
inline ValidityMask estimate_fov_mask(const GrayImage& input, const FovParams& params = {}) {
  const GrayImage img = input.scale() == IntensityScale::Byte ? input : to_byte(input);
  ValidityMask bright(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) bright.set(i, img[i] > params.intensity_threshold);
  if (!bright.any()) throw EmptyMaskError("estimate_fov_mask: no pixel above the border threshold");

  // Closing runs on a copy padded by the element radius so that the erosion
  // step cannot eat into fields that touch the image border.
  ValidityMask closed = bright;
  if (params.close_size >= 3) {
    const int r = params.close_size / 2;
    ValidityMask padded(img.width() + 2 * r, img.height() + 2 * r);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) padded.set(x + r, y + r, bright.at(x, y));
    padded = morphology(padded, StructuringElement::ellipse(params.close_size, params.close_size), MorphOp::Close);
    closed = crop(padded, Rect{r, r, img.width(), img.height()});
  }

  const auto comps = connected_components(closed, Connectivity::Eight);
  if (comps.empty()) throw EmptyMaskError("estimate_fov_mask: closing removed every pixel");
  return convex_hull_mask(component_mask(comps.front(), img.width(), img.height()));
}

}  // namespace longlens
