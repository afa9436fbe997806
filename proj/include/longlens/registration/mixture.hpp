#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "longlens/error.hpp"

namespace longlens {

/// Three-Gaussian intensity reference (dark, bulk, bright) on the Byte scale.
struct MixtureReference {
  std::array<double, 3> weights{0.15, 0.70, 0.15};
  std::array<double, 3> means{};
  std::array<double, 3> sigmas{};
  std::string version;

  [[nodiscard]] double cdf(double x) const {
    double f = 0.0;
    for (std::size_t c = 0; c < 3; ++c) f += weights[c] * 0.5 * std::erfc(-(x - means[c]) / (sigmas[c] * std::sqrt(2.0)));
    return f;
  }
  /// Probability mass of levels 0..level when the continuous density is
  /// rounded to the nearest level and clipped to [0, 255].
  [[nodiscard]] double discrete_cdf(int level) const {
    if (level < 0) return 0.0;
    if (level >= 255) return 1.0;
    return cdf(level + 0.5);
  }
  [[nodiscard]] double pdf(double x) const {
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    double f = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double z = (x - means[c]) / sigmas[c];
      f += weights[c] * kInvSqrt2Pi / sigmas[c] * std::exp(-0.5 * z * z);
    }
    return f;
  }
};

struct MixtureAnchors {
  double p05 = 50.0;
  double p50 = 128.0;
  double p95 = 190.0;
  std::array<double, 3> weights{0.15, 0.70, 0.15};
  double bulk_sigma = 25.0;
  // Both tails sit this many of their own sigmas from the median, which makes
  // the median anchor exact for any tail widths.
  double tail_offset_z = 1.5;
};

namespace detail {

inline double bisect_increasing(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  if (f(lo) > 0.0 || f(hi) < 0.0) throw ConfigError("mixture calibration: anchors not bracketed");
  for (int i = 0; i < iterations && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Solves the two tail widths (and with them the tail means) so the mixture
/// CDF passes through the three percentile anchors. Outer bisection on the
/// bright sigma, inner bisection on the dark sigma.
inline MixtureReference calibrate_mixture(const MixtureAnchors& a = {}) {
  if (!(a.p05 < a.p50 && a.p50 < a.p95)) throw ConfigError("mixture anchors must be increasing");
  MixtureReference m;
  m.weights = a.weights;
  m.means[1] = a.p50;
  m.sigmas[1] = a.bulk_sigma;
  const double k = a.tail_offset_z;

  auto set_tails = [&](double sd, double sb) {
    m.sigmas[0] = sd;
    m.sigmas[2] = sb;
    m.means[0] = a.p50 - k * sd;
    m.means[2] = a.p50 + k * sb;
  };
  auto solve_dark = [&](double sb) {
    return detail::bisect_increasing(
        [&](double sd) {
          set_tails(sd, sb);
          return m.cdf(a.p05) - 0.05;
        },
        0.5, 1000.0);
  };
  const double sb = detail::bisect_increasing(
      [&](double s) {
        set_tails(solve_dark(s), s);
        return 0.95 - m.cdf(a.p95);
      },
      0.5, 1000.0);
  set_tails(solve_dark(sb), sb);
  m.version = "mixture-v1(p05=" + std::to_string(a.p05) + ",p50=" + std::to_string(a.p50) +
              ",p95=" + std::to_string(a.p95) + ")";
  return m;
}

inline const MixtureReference& default_mixture() {
  static const MixtureReference cached = calibrate_mixture();
  return cached;
}

}  // namespace longlens
