#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/numeric.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

/// Dice overlap 2|A n B| / (|A| + |B|); two empty masks agree perfectly.
inline double dice(const ValidityMask& a, const ValidityMask& b) {
  if (!a.same_shape(b)) throw DimensionError("dice: mask dimensions differ");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] ? 1 : 0;
    nb += b[i] ? 1 : 0;
    both += (a[i] && b[i]) ? 1 : 0;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

/// True pixels with at least one 4-neighbour that is false or off-raster.
inline std::vector<std::size_t> boundary_pixels(const ValidityMask& m) {
  std::vector<std::size_t> out;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      if (!m.get_or_false(x - 1, y) || !m.get_or_false(x + 1, y) || !m.get_or_false(x, y - 1) ||
          !m.get_or_false(x, y + 1)) {
        out.push_back(m.index(x, y));
      }
    }
  }
  return out;
}

namespace detail {

// 1-D squared distance transform (lower envelope of parabolas).
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  // Skip leading infinite sites; a row with none stays infinite.
  int first = 0;
  while (first < n && f[static_cast<std::size_t>(first)] == kInf) ++first;
  if (first == n) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    const double fq = f[static_cast<std::size_t>(q)];
    if (fq == kInf) continue;
    double s = 0.0;
    for (;;) {
      const int vk = v[static_cast<std::size_t>(k)];
      s = ((fq + static_cast<double>(q) * q) - (f[static_cast<std::size_t>(vk)] + static_cast<double>(vk) * vk)) /
          (2.0 * (q - vk));
      if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const int vk = v[static_cast<std::size_t>(k)];
    d[static_cast<std::size_t>(q)] = static_cast<double>(q - vk) * (q - vk) + f[static_cast<std::size_t>(vk)];
  }
}

/// Exact squared Euclidean distance to the nearest site, separable in x then y.
inline std::vector<double> squared_distance_transform(int w, int h, const std::vector<std::size_t>& sites) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), kInf);
  for (std::size_t s : sites) grid[s] = 0.0;
  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n) + 1);
  std::vector<int> v(static_cast<std::size_t>(n));
  f.resize(static_cast<std::size_t>(h));
  d.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
  }
  f.resize(static_cast<std::size_t>(w));
  d.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[static_cast<std::size_t>(x)] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(x)];
  }
  return grid;
}

inline double directed_p95(const std::vector<std::size_t>& from, const std::vector<double>& sq_dist_to) {
  std::vector<double> d;
  d.reserve(from.size());
  for (std::size_t idx : from) d.push_back(std::sqrt(sq_dist_to[idx]));
  return percentile(std::move(d), 0.95);
}

}  // namespace detail

/// Symmetric 95th-percentile Hausdorff distance between mask boundaries, in
/// pixels. Percentiles interpolate linearly between ranks.
inline double hd95(const ValidityMask& a, const ValidityMask& b) {
  if (!a.same_shape(b)) throw DimensionError("hd95: mask dimensions differ");
  const auto ba = boundary_pixels(a);
  const auto bb = boundary_pixels(b);
  if (ba.empty() || bb.empty()) throw EmptyMaskError("hd95: empty mask");
  const auto to_b = detail::squared_distance_transform(a.width(), a.height(), bb);
  const auto to_a = detail::squared_distance_transform(a.width(), a.height(), ba);
  return std::max(detail::directed_p95(ba, to_b), detail::directed_p95(bb, to_a));
}

}  // namespace longlens
