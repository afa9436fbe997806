#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/metrics.hpp"
#include "longlens/numeric.hpp"
#include "longlens/raster/image.hpp"
#include "longlens/stats.hpp"

namespace longlens {

// ---------------------------------------------------------------------------
// Task entropy
// ---------------------------------------------------------------------------

/// Fixed-bin histogram of |delta| on [0, 1]. Pooling many pairs only needs the
/// bin counts, and every derived fraction or percentile is within one bin
/// width of the exact pixel-level value.
class AbsDeltaHistogram {
 public:
  static constexpr std::size_t kBins = 1024;

  void add(double abs_delta) {
    const double v = std::clamp(abs_delta, 0.0, 1.0);
    const auto bin = std::min(static_cast<std::size_t>(v * kBins), kBins - 1);
    ++counts_[bin];
    ++total_;
  }

  void merge(const AbsDeltaHistogram& other) {
    for (std::size_t i = 0; i < kBins; ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
  }

  [[nodiscard]] std::uint64_t total() const { return total_; }
  [[nodiscard]] const std::array<std::uint64_t, kBins>& counts() const { return counts_; }

  /// Share of samples below `threshold`, linear within the straddling bin.
  [[nodiscard]] double fraction_below(double threshold) const {
    if (total_ == 0) return 0.0;
    const double pos = std::clamp(threshold, 0.0, 1.0) * kBins;
    const auto full = std::min(static_cast<std::size_t>(pos), kBins);
    double acc = 0.0;
    for (std::size_t i = 0; i < full; ++i) acc += static_cast<double>(counts_[i]);
    if (full < kBins) acc += (pos - static_cast<double>(full)) * static_cast<double>(counts_[full]);
    return acc / static_cast<double>(total_);
  }

  /// Quantile with linear interpolation inside the bin that crosses q * total.
  [[nodiscard]] double quantile(double q) const {
    if (total_ == 0) throw EmptyListError("quantile of an empty histogram");
    const double target = std::clamp(q, 0.0, 1.0) * static_cast<double>(total_);
    double cum = 0.0;
    for (std::size_t i = 0; i < kBins; ++i) {
      const auto c = static_cast<double>(counts_[i]);
      if (c > 0.0 && cum + c >= target) {
        return (static_cast<double>(i) + (target - cum) / c) / kBins;
      }
      cum += c;
    }
    return 1.0;
  }

 private:
  std::array<std::uint64_t, kBins> counts_{};
  std::uint64_t total_ = 0;
};

struct PairStats {
  double delta_t = 0.0;
  double changed_fraction = 0.0;
  double mean_abs_delta = 0.0;
  double copy_last_ssim = 1.0;
  std::size_t valid_pixels = 0;
  AbsDeltaHistogram histogram;
};

inline constexpr double kDefaultChangedThreshold = 0.05;

/// Inter-visit change between the most recent frame and the target over
/// valid pixels.
inline PairStats pair_stats(const GrayImage& last, const GrayImage& target, const ValidityMask& mask, double delta_t,
                            double changed_threshold = kDefaultChangedThreshold) {
  if (!last.same_shape(target) || !mask.same_shape(last)) throw DimensionError("pair_stats: shape mismatch");
  if (last.scale() != IntensityScale::Unit || target.scale() != IntensityScale::Unit)
    throw ScaleError("pair_stats: inputs must be Unit scale");
  if (!mask.any()) throw EmptyMaskError("pair_stats: empty mask");
  if (!(delta_t >= 0.0)) throw NegativeDeltaError("pair_stats: delta_t must be >= 0");

  PairStats s;
  s.delta_t = delta_t;
  CompensatedSum abs_sum;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < last.size(); ++i) {
    if (!mask[i]) continue;
    const double ad = std::abs(target[i] - last[i]);
    abs_sum += ad;
    if (ad > changed_threshold) ++changed;
    s.histogram.add(ad);
    ++s.valid_pixels;
  }
  const auto n = static_cast<double>(s.valid_pixels);
  s.changed_fraction = static_cast<double>(changed) / n;
  s.mean_abs_delta = abs_sum.value() / n;
  s.copy_last_ssim = ssim(last, target, SsimConfig{}, mask);
  return s;
}

struct MeanSd {
  double mean = 0.0;
  std::optional<double> sd;
};

struct StratumRow {
  std::string label;
  std::size_t n_pairs = 0;
  std::optional<double> frac_below_5pct;
  std::optional<double> median_changed_fraction;
  std::optional<MeanSd> mean_abs_delta;
  std::optional<MeanSd> copy_last_ssim;
  std::optional<double> median_delta_t;
};

struct EntropyGlobal {
  std::uint64_t valid_pixels = 0;
  double frac_below_1pct = 0.0;
  double frac_below_5pct = 0.0;
  double frac_below_10pct = 0.0;
  double median_abs_delta = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  std::optional<double> pearson_r;  // absent when either variable is constant
};

struct EntropyReport {
  std::vector<StratumRow> strata;  // one per interval stratum, then "All pairs"
  EntropyGlobal global;
};

namespace detail {

inline MeanSd mean_sd(const std::vector<double>& v) {
  const Description d = describe(v);
  return MeanSd{d.mean, d.sd};
}

inline StratumRow summarize_stratum(std::string label, const std::vector<const PairStats*>& rows) {
  StratumRow r;
  r.label = std::move(label);
  r.n_pairs = rows.size();
  if (rows.empty()) return r;
  AbsDeltaHistogram pooled;
  std::vector<double> changed, mad, cls, dts;
  for (const PairStats* p : rows) {
    pooled.merge(p->histogram);
    changed.push_back(p->changed_fraction);
    mad.push_back(p->mean_abs_delta);
    cls.push_back(p->copy_last_ssim);
    dts.push_back(p->delta_t);
  }
  r.frac_below_5pct = pooled.fraction_below(0.05);
  r.median_changed_fraction = percentile(changed, 0.5);
  r.mean_abs_delta = mean_sd(mad);
  r.copy_last_ssim = mean_sd(cls);
  r.median_delta_t = percentile(dts, 0.5);
  return r;
}

inline std::string format_years(double v) {
  std::string s = std::to_string(v);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace detail

/// Pools per-pair statistics into interval strata (edges in years, ascending)
/// plus an all-pairs row. Invariant to the order of `pairs`.
inline EntropyReport entropy_report(std::vector<PairStats> pairs, const std::vector<double>& strata_edges = {0.25, 1.0}) {
  if (pairs.empty()) throw EmptyListError("entropy_report: no pairs");
  if (!std::is_sorted(strata_edges.begin(), strata_edges.end()))
    throw ConfigError("entropy_report: strata edges must ascend");

  // Canonical order makes every floating reduction below order-independent.
  std::sort(pairs.begin(), pairs.end(), [](const PairStats& a, const PairStats& b) {
    return std::tie(a.delta_t, a.changed_fraction, a.mean_abs_delta, a.copy_last_ssim, a.valid_pixels) <
           std::tie(b.delta_t, b.changed_fraction, b.mean_abs_delta, b.copy_last_ssim, b.valid_pixels);
  });

  EntropyReport report;
  const std::size_t n_strata = strata_edges.size() + 1;
  std::vector<std::vector<const PairStats*>> buckets(n_strata);
  for (const auto& p : pairs) {
    const auto k = static_cast<std::size_t>(std::upper_bound(strata_edges.begin(), strata_edges.end(), p.delta_t) -
                                            strata_edges.begin());
    buckets[k].push_back(&p);
  }
  for (std::size_t k = 0; k < n_strata; ++k) {
    std::string label;
    if (k == 0) {
      label = "dt < " + detail::format_years(strata_edges.empty() ? 0.0 : strata_edges[0]) + " y";
      if (strata_edges.empty()) label = "all";
    } else if (k == n_strata - 1) {
      label = "dt >= " + detail::format_years(strata_edges[k - 1]) + " y";
    } else {
      label = detail::format_years(strata_edges[k - 1]) + " <= dt < " + detail::format_years(strata_edges[k]) + " y";
    }
    report.strata.push_back(detail::summarize_stratum(std::move(label), buckets[k]));
  }
  std::vector<const PairStats*> all;
  for (const auto& p : pairs) all.push_back(&p);
  report.strata.push_back(detail::summarize_stratum("All pairs", all));

  AbsDeltaHistogram pooled;
  std::vector<double> dts, changed;
  for (const auto& p : pairs) {
    pooled.merge(p.histogram);
    dts.push_back(p.delta_t);
    changed.push_back(p.changed_fraction);
  }
  auto& g = report.global;
  g.valid_pixels = pooled.total();
  g.frac_below_1pct = pooled.fraction_below(0.01);
  g.frac_below_5pct = pooled.fraction_below(0.05);
  g.frac_below_10pct = pooled.fraction_below(0.10);
  g.median_abs_delta = pooled.quantile(0.5);
  g.p95 = pooled.quantile(0.95);
  g.p99 = pooled.quantile(0.99);
  try {
    g.pearson_r = pearson_r(dts, changed);
  } catch (const DegenerateCorrelationError&) {
    g.pearson_r.reset();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Posterior concentration
// ---------------------------------------------------------------------------

struct EyeSamples {
  std::string eye_id;
  std::vector<GrayImage> samples;
  GrayImage target;
  ValidityMask mask;
};

enum class InterSampleMode { AllPairs, SampleVsMean };

struct PosteriorEye {
  std::string eye_id;
  double mse = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
  double inter_sample_ssim = 1.0;
};

struct PosteriorReport {
  std::vector<PosteriorEye> eyes;
  MeanSd inter_sample_ssim;
  double prediction_mse = 0.0;  // mean over eyes
  double bias2 = 0.0;
  double variance = 0.0;
  double var_over_mse_pct = 0.0;           // pooled: mean variance / mean MSE
  double var_over_mse_pct_per_eye_mean = 0.0;  // mean over eyes of variance / MSE
  double bias2_fraction_pct = 100.0;
  double variance_fraction_pct = 0.0;
};

/// Bias-variance decomposition for one eye's K samples over valid pixels:
/// MSE = bias^2 + variance with population (divide-by-K) variance.
inline PosteriorEye posterior_eye(const EyeSamples& eye, InterSampleMode mode = InterSampleMode::AllPairs) {
  const std::size_t k = eye.samples.size();
  if (k < 2) throw KTooSmallError("posterior: eye " + eye.eye_id + " has fewer than 2 samples");
  for (const auto& s : eye.samples) {
    if (!s.same_shape(eye.target)) throw DimensionError("posterior: sample dimensions differ for eye " + eye.eye_id);
  }
  if (!eye.mask.same_shape(eye.target)) throw DimensionError("posterior: mask dimensions differ for eye " + eye.eye_id);
  if (!eye.mask.any()) throw EmptyMaskError("posterior: empty mask for eye " + eye.eye_id);

  const auto kd = static_cast<double>(k);
  CompensatedSum mse_sum, bias_sum, var_sum;
  std::size_t n = 0;
  GrayImage mean_img(eye.target.width(), eye.target.height(), eye.target.scale());
  for (std::size_t i = 0; i < eye.target.size(); ++i) {
    if (!eye.mask[i]) continue;
    CompensatedSum m;
    for (const auto& s : eye.samples) m += s[i];
    const double ybar = m.value() / kd;
    mean_img[i] = ybar;
    CompensatedSum sq_err, sq_dev;
    for (const auto& s : eye.samples) {
      sq_err += (s[i] - eye.target[i]) * (s[i] - eye.target[i]);
      sq_dev += (s[i] - ybar) * (s[i] - ybar);
    }
    mse_sum += sq_err.value() / kd;
    var_sum += sq_dev.value() / kd;
    bias_sum += (ybar - eye.target[i]) * (ybar - eye.target[i]);
    ++n;
  }
  PosteriorEye out;
  out.eye_id = eye.eye_id;
  out.mse = mse_sum.value() / static_cast<double>(n);
  out.bias2 = bias_sum.value() / static_cast<double>(n);
  out.variance = var_sum.value() / static_cast<double>(n);

  const SsimConfig cfg{};
  CompensatedSum ssim_sum;
  std::size_t n_ssim = 0;
  if (mode == InterSampleMode::AllPairs) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        ssim_sum += ssim(eye.samples[a], eye.samples[b], cfg, eye.mask);
        ++n_ssim;
      }
    }
  } else {
    for (std::size_t a = 0; a < k; ++a) {
      ssim_sum += ssim(eye.samples[a], mean_img, cfg, eye.mask);
      ++n_ssim;
    }
  }
  out.inter_sample_ssim = ssim_sum.value() / static_cast<double>(n_ssim);
  return out;
}

/// Pools per-eye decompositions. Fractions are taken on pooled (eye-averaged)
/// MSE, bias^2 and variance; the per-eye mean of variance / MSE is reported
/// alongside. With zero pooled error the whole (empty) error is attributed to bias.
inline PosteriorReport posterior_report(const std::vector<EyeSamples>& eyes,
                                        InterSampleMode mode = InterSampleMode::AllPairs) {
  if (eyes.empty()) throw EmptyListError("posterior_report: no eyes");
  PosteriorReport r;
  for (const auto& e : eyes) r.eyes.push_back(posterior_eye(e, mode));

  std::vector<double> ss, mses, biases, vars, ratios;
  for (const auto& e : r.eyes) {
    ss.push_back(e.inter_sample_ssim);
    mses.push_back(e.mse);
    biases.push_back(e.bias2);
    vars.push_back(e.variance);
    ratios.push_back(e.mse > 0.0 ? 100.0 * e.variance / e.mse : 0.0);
  }
  r.inter_sample_ssim = detail::mean_sd(ss);
  r.prediction_mse = describe(mses).mean;
  r.bias2 = describe(biases).mean;
  r.variance = describe(vars).mean;
  r.var_over_mse_pct_per_eye_mean = describe(ratios).mean;
  const double total = r.bias2 + r.variance;
  if (total > 0.0) {
    r.var_over_mse_pct = 100.0 * r.variance / r.prediction_mse;
    r.variance_fraction_pct = 100.0 * r.variance / total;
    r.bias2_fraction_pct = 100.0 - r.variance_fraction_pct;
  }
  return r;
}

}  // namespace longlens
