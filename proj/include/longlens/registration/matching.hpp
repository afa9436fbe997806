#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "longlens/registration/keypoints.hpp"

namespace longlens {

struct DescriptorMatch {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double distance = 0.0;
};

namespace detail {

inline double descriptor_sq_distance(const float* a, const float* b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < kDescriptorDim; ++k) {
    const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += d * d;
  }
  return acc;
}

}  // namespace detail

/// Brute-force mutual nearest neighbours with a Lowe ratio test (a -> b).
/// When b has a single descriptor there is no second neighbour and only the
/// mutuality check applies. Nearest-neighbour ties resolve to the lower index.
inline std::vector<DescriptorMatch> match_descriptors(const KeypointSet& a, const KeypointSet& b, double ratio = 0.85) {
  std::vector<DescriptorMatch> out;
  if (a.size() == 0 || b.size() == 0) return out;

  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  std::vector<double> dist(na * nb);
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) dist[i * nb + j] = detail::descriptor_sq_distance(a.descriptor(i), b.descriptor(j));

  std::vector<std::size_t> best_in_a(nb, 0);
  for (std::size_t j = 0; j < nb; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < na; ++i) {
      if (dist[i * nb + j] < best) {
        best = dist[i * nb + j];
        best_in_a[j] = i;
      }
    }
  }

  for (std::size_t i = 0; i < na; ++i) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t j1 = 0;
    for (std::size_t j = 0; j < nb; ++j) {
      const double d = dist[i * nb + j];
      if (d < d1) {
        d2 = d1;
        d1 = d;
        j1 = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (best_in_a[j1] != i) continue;
    const double e1 = std::sqrt(d1);
    if (nb >= 2) {
      const double e2 = std::sqrt(d2);
      if (!(e2 > 0.0) || !(e1 / e2 < ratio)) continue;
    }
    out.push_back({i, j1, e1});
  }
  return out;
}

}  // namespace longlens
