#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/numeric.hpp"

namespace longlens {

struct PairedSample {
  std::vector<double> a;
  std::vector<double> b;
};

enum class WilcoxonMethod { Exact, NormalApprox };

inline std::string_view to_string(WilcoxonMethod m) {
  return m == WilcoxonMethod::Exact ? "exact" : "normal";
}

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double p = 1.0;
  std::size_t n_effective = 0;
  WilcoxonMethod method = WilcoxonMethod::Exact;
  bool degenerate = false;  // every difference was zero
};

/// Samples with at most this many non-zero differences get exact p-values.
inline constexpr std::size_t kWilcoxonExactMaxN = 12;

namespace detail {

/// Midranks of |d|, doubled so tied ranks stay integral.
inline std::vector<long long> doubled_midranks(const std::vector<double>& abs_d) {
  const std::size_t n = abs_d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
  std::vector<long long> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
    // Ranks i+1..j+1 share their mean; doubled: (i + 1) + (j + 1).
    const auto r2 = static_cast<long long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r2;
    i = j + 1;
  }
  return ranks;
}

// Two-sided exact p: share of the 2^n sign patterns whose W+ lies at least as
// far from its null mean as the observed W+.
inline double wilcoxon_exact_p(const std::vector<long long>& ranks2, long long observed_w2) {
  const std::size_t n = ranks2.size();
  const long long total2 = std::accumulate(ranks2.begin(), ranks2.end(), 0LL);
  // Work in units of 4*W+ - 2*total so the center is 0 and everything is integral.
  const long long obs_dev = std::llabs(2 * observed_w2 - total2);
  std::uint64_t extreme = 0;
  const std::uint64_t patterns = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    long long w2 = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) w2 += ranks2[i];
    if (std::llabs(2 * w2 - total2) >= obs_dev) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(patterns);
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// Two-sided Wilcoxon signed-rank test on a - b. Zero differences are dropped,
/// ties get midranks. Small samples are enumerated exactly; larger ones use the
/// tie-corrected normal approximation with a 0.5 continuity correction.
/// `force` overrides the automatic choice.
inline WilcoxonResult wilcoxon_signed_rank(const PairedSample& s, std::optional<WilcoxonMethod> force = std::nullopt) {
  if (s.a.size() != s.b.size()) throw DimensionError("wilcoxon: paired samples differ in length");
  if (s.a.empty()) throw EmptyListError("wilcoxon: empty sample");

  std::vector<double> d;
  for (std::size_t i = 0; i < s.a.size(); ++i) {
    const double diff = s.a[i] - s.b[i];
    if (std::isnan(diff)) throw ConfigError("wilcoxon: NaN in paired sample");
    if (diff != 0.0) d.push_back(diff);
  }

  WilcoxonResult r;
  r.n_effective = d.size();
  if (d.empty()) {
    r.degenerate = true;
    r.p = 1.0;
    return r;
  }

  std::vector<double> abs_d(d.size());
  std::transform(d.begin(), d.end(), abs_d.begin(), [](double v) { return std::abs(v); });
  const auto ranks2 = detail::doubled_midranks(abs_d);
  long long w_plus2 = 0;
  long long total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += ranks2[i];
    if (d[i] > 0) w_plus2 += ranks2[i];
  }
  r.w_plus = static_cast<double>(w_plus2) / 2.0;
  r.statistic = std::min(r.w_plus, static_cast<double>(total2 - w_plus2) / 2.0);

  const std::size_t n = d.size();
  r.method = force.value_or(n <= kWilcoxonExactMaxN ? WilcoxonMethod::Exact : WilcoxonMethod::NormalApprox);
  if (r.method == WilcoxonMethod::Exact) {
    if (n > 30) throw ConfigError("wilcoxon: exact enumeration limited to n <= 30");
    r.p = detail::wilcoxon_exact_p(ranks2, w_plus2);
    return r;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<long long> sorted = ranks2;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
  }
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) {
    r.p = 1.0;
    return r;
  }
  const double z = (std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
  r.p = z <= 0.0 ? 1.0 : std::min(1.0, 2.0 * detail::normal_sf(z));
  return r;
}

/// Product-moment correlation.
inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson_r: lengths differ");
  if (x.size() < 2) throw DegenerateCorrelationError("pearson_r: needs at least two points");
  const double n = static_cast<double>(x.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  CompensatedSum sxx, syy, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) throw DegenerateCorrelationError("pearson_r: constant input");
  return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

struct Description {
  double mean = 0.0;
  std::optional<double> sd;  // sample (n-1) standard deviation; absent for n == 1
  double median = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  std::size_t n = 0;
};

inline Description describe(std::span<const double> values) {
  if (values.empty()) throw EmptyListError("describe: empty list");
  Description d;
  d.n = values.size();
  CompensatedSum sum;
  for (double v : values) sum += v;
  d.mean = sum.value() / static_cast<double>(d.n);
  if (d.n >= 2) {
    CompensatedSum ss;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss.value() / static_cast<double>(d.n - 1));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  d.median = percentile_sorted(sorted, 0.5);
  d.p5 = percentile_sorted(sorted, 0.05);
  d.p95 = percentile_sorted(sorted, 0.95);
  d.p99 = percentile_sorted(sorted, 0.99);
  return d;
}

}  // namespace longlens
