#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "longlens/error.hpp"

namespace longlens {

// Neumaier compensated summation. Pooled statistics over millions of pixels
// go through this so the reduction does not depend on accumulation order to
// more than a few ulps.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) {
    add(v);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Percentile of an already sorted sequence using linear interpolation
/// between closest ranks (position q * (n - 1)).
inline double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyListError("percentile of empty sequence");
  if (sorted.size() == 1) return sorted.front();
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, q);
}

}  // namespace longlens
