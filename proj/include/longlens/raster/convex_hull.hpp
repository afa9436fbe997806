#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/geometry/hull.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

/// Fills the convex hull of all true pixel centers. A pixel is set when its
/// center lies inside or on the hull, so the result always contains the input.
inline ValidityMask convex_hull_mask(const ValidityMask& mask) {
  // Only the extreme pixels of each row can be hull vertices.
  std::vector<Point2i> pts;
  for (int y = 0; y < mask.height(); ++y) {
    int first = -1, last = -1;
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      if (first < 0) first = x;
      last = x;
    }
    if (first < 0) continue;
    pts.push_back({first, y});
    if (last != first) pts.push_back({last, y});
  }
  if (pts.empty()) throw EmptyMaskError("convex hull of an empty mask");

  const auto hull = convex_hull(pts);
  long long ymin = hull.front().y, ymax = hull.front().y;
  for (const auto& p : hull) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }

  ValidityMask out(mask.width(), mask.height());
  for (long long y = ymin; y <= ymax; ++y) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    auto take = [&](double x) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    };
    for (const auto& p : hull)
      if (p.y == y) take(static_cast<double>(p.x));
    for (std::size_t i = 0; hull.size() > 1 && i < hull.size(); ++i) {
      const auto& p = hull[i];
      const auto& q = hull[(i + 1) % hull.size()];
      if (p.y == q.y || y < std::min(p.y, q.y) || y > std::max(p.y, q.y)) continue;
      // Integer operands below 2^26: the quotient is either an exact integer
      // or at least 1/den away from one, so floor/ceil below are exact.
      take(static_cast<double>(p.x) +
           static_cast<double>((y - p.y) * (q.x - p.x)) / static_cast<double>(q.y - p.y));
    }
    if (lo > hi) continue;
    const int x0 = std::max(0, static_cast<int>(std::ceil(lo)));
    const int x1 = std::min(mask.width() - 1, static_cast<int>(std::floor(hi)));
    for (int x = x0; x <= x1; ++x) out.set(x, static_cast<int>(y));
  }
  return out;
}

}  // namespace longlens
