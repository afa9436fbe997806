#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "longlens/atrophy/mask_metrics.hpp"
#include "longlens/atrophy/segmentation.hpp"
#include "longlens/atrophy/sweep.hpp"
#include "longlens/cli/common.hpp"
#include "longlens/cli/config.hpp"
#include "longlens/cli/manifest.hpp"
#include "longlens/cli/phantom.hpp"
#include "longlens/diagnostics.hpp"
#include "longlens/metrics.hpp"
#include "longlens/raster/io.hpp"
#include "longlens/registration/harmonize.hpp"
#include "longlens/registration/pipeline.hpp"
#include "longlens/stats.hpp"
#include "longlens/temporal.hpp"

namespace longlens::cli {

namespace fs = std::filesystem;

inline std::string fixed(double v, int precision) {
  if (!std::isfinite(v)) return format_number(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string prediction_stem(const std::string& eye_id, std::size_t target_index) {
  return eye_id + "_" + std::to_string(target_index);
}

/// Finds <stem>.llf1 or <stem>.pgm in dir.
inline std::optional<fs::path> find_image(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".llf1", ".pgm"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

inline Json tool_header(const std::string& command) {
  Json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  return j;
}

struct EyeFailure {
  std::string eye_id;
  std::string error;
};

inline Json failures_json(const std::vector<EyeFailure>& failures) {
  auto arr = Json::array();
  for (const auto& f : failures) arr.push_back({{"eye_id", f.eye_id}, {"error", f.error}});
  return arr;
}

// ---------------------------------------------------------------------------
// phantom
// ---------------------------------------------------------------------------

inline int cmd_phantom(const Config& cfg, const fs::path& out) {
  const Manifest m = write_phantom_dataset(cfg.phantom, out);
  std::cout << "phantom: wrote " << m.eyes.size() << " eyes x " << cfg.phantom.frames_per_eye << " visits to "
            << (out / "manifest.json").string() << "\n";
  return Success;
}

// ---------------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------------

enum class BaselineKind { CopyLast, Spline };

/// Predicts each eye's final visit from the visits before it.
inline int cmd_baseline(const Config& cfg, BaselineKind kind, const fs::path& manifest_path, const fs::path& out) {
  const Manifest m = load_manifest(manifest_path);
  m.validate();
  fs::create_directories(out);
  std::vector<std::optional<std::string>> errors(m.eyes.size());
  parallel_for(m.eyes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = m.eyes[i];
    try {
      EyeSequence seq = load_eye_sequence(m, e);
      if (seq.frames.size() < 2) throw InsufficientHistoryError("eye " + e.eye_id + " needs at least 2 visits");
      const double t_star = seq.frames.back().t;
      seq.frames.pop_back();
      const GrayImage pred = kind == BaselineKind::CopyLast ? copy_last(seq, t_star) : linear_spline(seq, t_star);
      const std::string stem = prediction_stem(e.eye_id, e.visits.size() - 1);
      // Copy-last of a byte dataset is still byte-valued; PGM keeps it exact.
      if (kind == BaselineKind::CopyLast && m.scale == IntensityScale::Byte) save_pgm(out / (stem + ".pgm"), to_byte(pred));
      else save_llf1(out / (stem + ".llf1"), pred);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    ++failed;
    std::cerr << "baseline: " << m.eyes[i].eye_id << ": " << *errors[i] << "\n";
  }
  std::cout << "baseline: wrote " << m.eyes.size() - failed << " predictions to " << out.string() << "\n";
  if (failed == m.eyes.size()) return Fatal;
  return failed ? Partial : Success;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols{"mae", "psnr", "ssim", "delta_ssim", "dice", "hd95"};
  return cols;
}

struct MetricRecord {
  std::string eye_id;
  double delta_t = 0.0;
  double mae = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double delta_ssim = 0.0;
  std::optional<double> dice;
  std::optional<double> hd95;
};

/// Metrics for one eye: the final visit is I*, the one before it I_N, and
/// the evaluation mask is the intersection of their validity masks.
inline MetricRecord evaluate_eye(const Config& cfg, const EyeSequence& seq, const GrayImage& pred_input) {
  if (seq.frames.size() < 2) throw InsufficientHistoryError("eye " + seq.eye_id + " needs at least 2 visits");
  const Frame& target = seq.frames.back();
  const Frame& last = seq.frames[seq.frames.size() - 2];
  const GrayImage pred = to_unit(pred_input);
  if (!pred.same_shape(target.image)) throw DimensionError("eye " + seq.eye_id + ": prediction dimensions differ");
  const ValidityMask mask = mask_and(target.mask, last.mask);

  MetricRecord r;
  r.eye_id = seq.eye_id;
  r.delta_t = target.t - last.t;
  r.mae = mae(pred, target.image, mask);
  r.psnr = psnr(pred, target.image, mask);
  r.ssim = ssim(pred, target.image, cfg.ssim, mask);
  SsimConfig change_cfg = SsimConfig::change_map();
  change_cfg.window = cfg.ssim.window;
  r.delta_ssim = delta_ssim(pred, target.image, last.image, mask, change_cfg);
  try {
    const ValidityMask seg_pred = segment_atrophy(pred, cfg.segmentation);
    const ValidityMask seg_gt = segment_atrophy(target.image, cfg.segmentation);
    r.dice = dice(seg_pred, seg_gt);
    try {
      r.hd95 = hd95(seg_pred, seg_gt);
    } catch (const Error&) {
      r.hd95.reset();
    }
  } catch (const Error&) {
    r.dice.reset();
  }
  return r;
}

inline std::vector<std::string> metric_row(const MetricRecord& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("n/a"); };
  return {r.eye_id, format_number(r.delta_t), format_number(r.mae), format_number(r.psnr), format_number(r.ssim),
          format_number(r.delta_ssim), opt(r.dice), opt(r.hd95)};
}

/// mean and SD of the finite numeric entries of one CSV column.
inline Json column_summary(const CsvTable& t, const std::string& col) {
  const auto idx = t.column(col);
  std::vector<double> v;
  std::size_t excluded = 0;
  for (const auto& row : t.rows) {
    const auto x = parse_number(row[*idx]);
    if (x && std::isfinite(*x)) v.push_back(*x);
    else ++excluded;
  }
  Json j;
  j["n"] = v.size();
  j["excluded"] = excluded;
  if (v.empty()) {
    j["mean"] = nullptr;
    j["sd"] = nullptr;
  } else {
    const Description d = describe(v);
    j["mean"] = d.mean;
    j["sd"] = optional_json(d.sd);
  }
  return j;
}

inline int cmd_evaluate(const Config& cfg, const fs::path& manifest_path, const fs::path& pred_dir,
                        const std::string& method, const fs::path& out) {
  const Manifest m = load_manifest(manifest_path);
  m.validate();
  std::vector<std::optional<MetricRecord>> records(m.eyes.size());
  std::vector<std::optional<std::string>> errors(m.eyes.size());
  parallel_for(m.eyes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = m.eyes[i];
    try {
      const auto path = find_image(pred_dir, prediction_stem(e.eye_id, e.visits.size() - 1));
      if (!path) throw MissingPredictionError("no prediction " + prediction_stem(e.eye_id, e.visits.size() - 1));
      records[i] = evaluate_eye(cfg, load_eye_sequence(m, e), load_image(*path));
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  });

  CsvTable table;
  table.header = {"eye_id", "delta_t"};
  for (const auto& c : metric_columns()) table.header.push_back(c);
  std::vector<EyeFailure> failures;
  for (std::size_t i = 0; i < m.eyes.size(); ++i) {
    if (records[i]) table.rows.push_back(metric_row(*records[i]));
    else failures.push_back({m.eyes[i].eye_id, *errors[i]});
  }
  write_text_atomic(out / (method + "_metrics.csv"), csv_text(table));

  Json summary = tool_header("evaluate");
  summary["method"] = method;
  summary["eyes_total"] = m.eyes.size();
  summary["eyes_evaluated"] = table.rows.size();
  summary["coverage"] = m.eyes.empty() ? 0.0 : static_cast<double>(table.rows.size()) / static_cast<double>(m.eyes.size());
  Json metrics;
  for (const auto& c : metric_columns()) metrics[c] = column_summary(table, c);
  summary["metrics"] = metrics;
  summary["failures"] = failures_json(failures);
  write_json(out / (method + "_summary.json"), summary);

  std::cout << "evaluate " << method << ": " << table.rows.size() << "/" << m.eyes.size() << " eyes\n";
  for (const auto& c : metric_columns()) {
    const auto& s = metrics[c];
    std::cout << "  " << pad_right(c, 11);
    if (s["mean"].is_null()) std::cout << "n/a\n";
    else
      std::cout << fixed(s["mean"].get<double>(), 4) << " +/- "
                << (s["sd"].is_null() ? std::string("n/a") : fixed(s["sd"].get<double>(), 4)) << "  (n=" << s["n"].get<std::size_t>()
                << ")\n";
  }
  for (const auto& f : failures) std::cerr << "evaluate: " << f.eye_id << ": " << f.error << "\n";
  if (table.rows.empty()) return Fatal;
  return failures.empty() ? Success : Partial;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct MetricComparison {
  std::string metric;
  std::size_t n = 0;
  std::size_t excluded = 0;
  std::optional<WilcoxonResult> test;
  std::optional<double> mean_a;
  std::optional<double> mean_b;
  std::string direction;
};

inline std::vector<MetricComparison> compare_tables(const CsvTable& a, const CsvTable& b, const std::vector<std::string>& metrics) {
  const auto ida = a.column("eye_id"), idb = b.column("eye_id");
  if (!ida || !idb) throw FormatError("compare: both CSVs need an eye_id column");
  std::map<std::string, std::size_t> rows_b;
  for (std::size_t r = 0; r < b.rows.size(); ++r) rows_b.emplace(b.rows[r][*idb], r);
  std::map<std::string, std::pair<std::size_t, std::size_t>> joined;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    const auto it = rows_b.find(a.rows[r][*ida]);
    if (it != rows_b.end()) joined.emplace(it->first, std::make_pair(r, it->second));
  }
  if (joined.empty()) throw NoOverlapError("compare: the two CSVs share no eye_id");

  std::vector<MetricComparison> out;
  for (const auto& metric : metrics) {
    const auto ca = a.column(metric), cb = b.column(metric);
    if (!ca || !cb) throw FormatError("compare: metric column '" + metric + "' missing");
    MetricComparison c;
    c.metric = metric;
    PairedSample s;
    for (const auto& [eye, rows] : joined) {
      const auto va = parse_number(a.rows[rows.first][*ca]);
      const auto vb = parse_number(b.rows[rows.second][*cb]);
      if (!va || !vb || !std::isfinite(*va) || !std::isfinite(*vb)) {
        ++c.excluded;
        continue;
      }
      s.a.push_back(*va);
      s.b.push_back(*vb);
    }
    c.n = s.a.size();
    if (c.n > 0) {
      c.test = wilcoxon_signed_rank(s);
      c.mean_a = describe(s.a).mean;
      c.mean_b = describe(s.b).mean;
      c.direction = *c.mean_a > *c.mean_b ? "a>b" : (*c.mean_a < *c.mean_b ? "a<b" : "a=b");
    } else {
      c.direction = "n/a";
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline int cmd_compare(const Config&, const fs::path& csv_a, const fs::path& csv_b, std::vector<std::string> metrics,
                       const fs::path& out) {
  const CsvTable a = read_csv(csv_a);
  const CsvTable b = read_csv(csv_b);
  if (metrics.empty()) metrics = metric_columns();
  const auto results = compare_tables(a, b, metrics);

  CsvTable t;
  t.header = {"metric", "n", "excluded", "statistic", "w_plus", "p", "test", "mean_a", "mean_b", "direction"};
  Json j = tool_header("compare");
  j["a"] = csv_a.filename().string();
  j["b"] = csv_b.filename().string();
  auto arr = Json::array();
  for (const auto& c : results) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("n/a"); };
    t.rows.push_back({c.metric, std::to_string(c.n), std::to_string(c.excluded),
                      c.test ? format_number(c.test->statistic) : "n/a", c.test ? format_number(c.test->w_plus) : "n/a",
                      c.test ? format_number(c.test->p) : "n/a",
                      c.test ? (c.test->degenerate ? std::string("degenerate") : std::string(to_string(c.test->method))) : "n/a",
                      opt(c.mean_a), opt(c.mean_b), c.direction});
    Json jc;
    jc["metric"] = c.metric;
    jc["n"] = c.n;
    jc["excluded"] = c.excluded;
    jc["p"] = c.test ? Json(c.test->p) : Json(nullptr);
    jc["statistic"] = c.test ? Json(c.test->statistic) : Json(nullptr);
    jc["degenerate"] = c.test ? c.test->degenerate : false;
    jc["mean_a"] = optional_json(c.mean_a);
    jc["mean_b"] = optional_json(c.mean_b);
    jc["direction"] = c.direction;
    arr.push_back(std::move(jc));
    std::cout << "compare " << pad_right(c.metric, 11) << " n=" << c.n << "  p="
              << (c.test ? format_number(c.test->p) : std::string("n/a")) << "  " << c.direction << "\n";
  }
  j["metrics"] = arr;
  write_text_atomic(out / "compare.csv", csv_text(t));
  write_json(out / "compare.json", j);
  return Success;
}

// ---------------------------------------------------------------------------
// entropy
// ---------------------------------------------------------------------------

/// Adjacent-visit pair statistics for one eye over the intersection of the
/// two validity masks.
inline std::vector<PairStats> eye_pair_stats(const EyeSequence& seq, double changed_threshold) {
  std::vector<PairStats> out;
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const Frame& a = seq.frames[k - 1];
    const Frame& b = seq.frames[k];
    out.push_back(pair_stats(a.image, b.image, mask_and(a.mask, b.mask), b.t - a.t, changed_threshold));
  }
  return out;
}

inline Json mean_sd_json(const std::optional<MeanSd>& m) {
  if (!m) return nullptr;
  return Json{{"mean", m->mean}, {"sd", optional_json(m->sd)}};
}

inline Json entropy_json(const EntropyReport& r) {
  Json j = tool_header("entropy");
  auto strata = Json::array();
  for (const auto& s : r.strata) {
    Json js;
    js["label"] = s.label;
    js["n_pairs"] = s.n_pairs;
    js["frac_below_5pct"] = optional_json(s.frac_below_5pct);
    js["median_changed_fraction"] = optional_json(s.median_changed_fraction);
    js["mean_abs_delta"] = mean_sd_json(s.mean_abs_delta);
    js["copy_last_ssim"] = mean_sd_json(s.copy_last_ssim);
    js["median_delta_t"] = optional_json(s.median_delta_t);
    strata.push_back(std::move(js));
  }
  j["strata"] = strata;
  const auto& g = r.global;
  j["global"] = {{"valid_pixels", g.valid_pixels},         {"frac_below_1pct", g.frac_below_1pct},
                 {"frac_below_5pct", g.frac_below_5pct},   {"frac_below_10pct", g.frac_below_10pct},
                 {"median_abs_delta", g.median_abs_delta}, {"p95", g.p95},
                 {"p99", g.p99},                           {"pearson_r", optional_json(g.pearson_r)}};
  return j;
}

inline std::string entropy_text(const EntropyReport& r) {
  auto opt = [](const std::optional<double>& v, int p) { return v ? fixed(*v, p) : std::string("-"); };
  auto msd = [](const std::optional<MeanSd>& v) {
    if (!v) return std::string("-");
    return fixed(v->mean, 4) + " +/- " + (v->sd ? fixed(*v->sd, 4) : std::string("-"));
  };
  std::string s = "Task entropy\n";
  s += pad_right("Stratum", 22) + pad_right("Pairs", 7) + pad_right("|d|<0.05", 10) + pad_right("Med chg", 9) +
       pad_right("Mean |d|", 20) + pad_right("Copy-last SSIM", 20) + "Med dt\n";
  for (const auto& row : r.strata) {
    s += pad_right(row.label, 22) + pad_right(std::to_string(row.n_pairs), 7) + pad_right(opt(row.frac_below_5pct, 4), 10) +
         pad_right(opt(row.median_changed_fraction, 4), 9) + pad_right(msd(row.mean_abs_delta), 20) +
         pad_right(msd(row.copy_last_ssim), 20) + opt(row.median_delta_t, 3) + "\n";
  }
  const auto& g = r.global;
  s += "valid pixels " + std::to_string(g.valid_pixels) + "; |d|<0.01 " + fixed(g.frac_below_1pct, 4) + ", <0.05 " +
       fixed(g.frac_below_5pct, 4) + ", <0.10 " + fixed(g.frac_below_10pct, 4) + "; median |d| " + fixed(g.median_abs_delta, 4) +
       ", P95 " + fixed(g.p95, 4) + ", P99 " + fixed(g.p99, 4) + "\n";
  s += "r(dt, changed fraction) = " + (g.pearson_r ? fixed(*g.pearson_r, 4) : std::string("undefined")) + "\n";
  return s;
}

inline int cmd_entropy(const Config& cfg, const fs::path& manifest_path, const fs::path& out) {
  const Manifest m = load_manifest(manifest_path);
  m.validate();
  std::vector<std::vector<PairStats>> per_eye(m.eyes.size());
  std::vector<std::optional<std::string>> errors(m.eyes.size());
  parallel_for(m.eyes.size(), cfg.jobs, [&](std::size_t i) {
    try {
      per_eye[i] = eye_pair_stats(load_eye_sequence(m, m.eyes[i]), cfg.change_threshold);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  });
  std::vector<PairStats> pairs;
  std::vector<EyeFailure> failures;
  CsvTable csv;
  csv.header = {"eye_id", "pair", "delta_t", "changed_fraction", "mean_abs_delta", "copy_last_ssim", "valid_pixels"};
  for (std::size_t i = 0; i < m.eyes.size(); ++i) {
    if (errors[i]) {
      failures.push_back({m.eyes[i].eye_id, *errors[i]});
      continue;
    }
    for (std::size_t k = 0; k < per_eye[i].size(); ++k) {
      const auto& p = per_eye[i][k];
      csv.rows.push_back({m.eyes[i].eye_id, std::to_string(k), format_number(p.delta_t), format_number(p.changed_fraction),
                          format_number(p.mean_abs_delta), format_number(p.copy_last_ssim), std::to_string(p.valid_pixels)});
      pairs.push_back(p);
    }
  }
  const EntropyReport report = entropy_report(pairs, cfg.stratum_edges);
  Json j = entropy_json(report);
  j["failures"] = failures_json(failures);
  write_json(out / "entropy.json", j);
  write_text_atomic(out / "entropy.txt", entropy_text(report));
  write_text_atomic(out / "entropy_pairs.csv", csv_text(csv));
  std::cout << entropy_text(report);
  for (const auto& f : failures) std::cerr << "entropy: " << f.eye_id << ": " << f.error << "\n";
  return failures.empty() ? Success : Partial;
}

// ---------------------------------------------------------------------------
// posterior
// ---------------------------------------------------------------------------

inline Json posterior_json(const PosteriorReport& r, std::size_t k) {
  Json j = tool_header("posterior");
  j["k"] = k;
  j["inter_sample_ssim"] = mean_sd_json(r.inter_sample_ssim);
  j["prediction_mse"] = r.prediction_mse;
  j["bias2"] = r.bias2;
  j["variance"] = r.variance;
  j["var_over_mse_pct"] = r.var_over_mse_pct;
  j["var_over_mse_pct_per_eye_mean"] = r.var_over_mse_pct_per_eye_mean;
  j["bias2_fraction_pct"] = r.bias2_fraction_pct;
  j["variance_fraction_pct"] = r.variance_fraction_pct;
  auto eyes = Json::array();
  for (const auto& e : r.eyes)
    eyes.push_back({{"eye_id", e.eye_id},
                    {"mse", e.mse},
                    {"bias2", e.bias2},
                    {"variance", e.variance},
                    {"inter_sample_ssim", e.inter_sample_ssim}});
  j["eyes"] = eyes;
  return j;
}

inline std::string posterior_text(const PosteriorReport& r, std::size_t k) {
  std::string s = "Posterior concentration (K=" + std::to_string(k) + ", " + std::to_string(r.eyes.size()) + " eyes)\n";
  s += "Inter-sample SSIM        " + fixed(r.inter_sample_ssim.mean, 4) + " +/- " +
       (r.inter_sample_ssim.sd ? fixed(*r.inter_sample_ssim.sd, 4) : std::string("-")) + "\n";
  s += "Prediction MSE           " + fixed(r.prediction_mse, 6) + "\n";
  s += "Inter-sample variance    " + fixed(r.variance, 6) + "\n";
  s += "Variance / MSE           " + fixed(r.var_over_mse_pct, 2) + "% (per-eye mean " +
       fixed(r.var_over_mse_pct_per_eye_mean, 2) + "%)\n";
  s += "Bias^2 fraction          " + fixed(r.bias2_fraction_pct, 2) + "%\n";
  s += "Variance fraction        " + fixed(r.variance_fraction_pct, 2) + "%\n";
  return s;
}

inline int cmd_posterior(const Config& cfg, const fs::path& manifest_path, const fs::path& samples_dir, const fs::path& out) {
  const Manifest m = load_manifest(manifest_path);
  m.validate();
  const std::size_t k = cfg.posterior_k;
  if (k < 2) throw KTooSmallError("posterior: K must be at least 2");
  std::vector<std::optional<EyeSamples>> loaded(m.eyes.size());
  std::vector<std::optional<std::string>> errors(m.eyes.size());
  parallel_for(m.eyes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = m.eyes[i];
    try {
      const EyeSequence seq = load_eye_sequence(m, e);
      EyeSamples s;
      s.eye_id = e.eye_id;
      s.target = seq.frames.back().image;
      s.mask = seq.frames.size() >= 2 ? mask_and(seq.frames.back().mask, seq.frames[seq.frames.size() - 2].mask)
                                      : seq.frames.back().mask;
      for (std::size_t j = 0; j < k; ++j) {
        const auto path = find_image(samples_dir, e.eye_id + "_s" + std::to_string(j));
        if (!path) throw MissingPredictionError("eye " + e.eye_id + ": missing sample " + std::to_string(j));
        s.samples.push_back(to_unit(load_image(*path)));
      }
      posterior_eye(s, cfg.inter_sample);  // surfaces per-eye errors with eye context
      loaded[i] = std::move(s);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  });
  std::vector<EyeSamples> eyes;
  std::vector<EyeFailure> failures;
  for (std::size_t i = 0; i < m.eyes.size(); ++i) {
    if (loaded[i]) eyes.push_back(std::move(*loaded[i]));
    else failures.push_back({m.eyes[i].eye_id, *errors[i]});
  }
  for (const auto& f : failures) std::cerr << "posterior: " << f.eye_id << ": " << f.error << "\n";
  if (eyes.empty()) return Fatal;
  const PosteriorReport report = posterior_report(eyes, cfg.inter_sample);
  Json j = posterior_json(report, k);
  j["failures"] = failures_json(failures);
  write_json(out / "posterior.json", j);
  write_text_atomic(out / "posterior.txt", posterior_text(report, k));
  std::cout << posterior_text(report, k);
  return failures.empty() ? Success : Partial;
}

// ---------------------------------------------------------------------------
// register / harmonize
// ---------------------------------------------------------------------------

inline std::string resolution_key(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

inline GrayImage native_crop(const Config& cfg, const GrayImage& img) {
  const auto it = cfg.crop_fractions.find(resolution_key(img.width(), img.height()));
  if (it == cfg.crop_fractions.end() || it->second == 1.0) return img;
  return crop(img, center_crop_rect(img.width(), img.height(), it->second));
}

inline Json matrix_json(const Eigen::Matrix3d& h) {
  auto arr = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(h(r, c));
  return arr;
}

inline Json visit_report_json(const VisitReport& v) {
  Json j;
  j["visit_id"] = v.visit_id;
  j["t"] = v.t;
  j["is_anchor"] = v.is_anchor;
  j["keypoints_in_fov"] = v.keypoints_in_fov;
  j["fov_area_frac"] = v.fov_area_frac;
  j["n_matches"] = v.n_matches;
  if (v.model) {
    const auto& d = v.model->diagnostics;
    j["kind"] = std::string(to_string(v.model->kind));
    j["matrix"] = matrix_json(v.model->matrix);
    j["diagnostics"] = {{"inlier_count", d.inlier_count},
                        {"inlier_ratio", d.inlier_ratio},
                        {"median_reproj_err", number_json(d.median_reproj_err)},
                        {"hull_spread_frac", d.hull_spread_frac},
                        {"composite_score", d.composite_score},
                        {"anisotropy", number_json(d.anisotropy)},
                        {"cond_number", number_json(d.cond_number)},
                        {"proj_magnitude", d.proj_magnitude}};
  } else {
    j["kind"] = nullptr;
  }
  if (v.crop_matrix) j["crop_matrix"] = matrix_json(*v.crop_matrix);
  j["accepted"] = v.decision.accepted;
  j["reasons"] = v.decision.reasons;
  j["survived"] = v.survived;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

/// Writes an eye's frames as <dir>/<eye>_v<k>.pgm plus mask files and
/// returns the manifest entry (paths relative to out).
inline EyeEntry write_sequence(const EyeSequence& seq, const fs::path& out) {
  EyeEntry entry;
  entry.eye_id = seq.eye_id;
  entry.laterality = seq.laterality;
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const std::string stem = seq.eye_id + "_v" + std::to_string(k);
    VisitEntry v;
    v.t = seq.frames[k].t;
    v.image_path = "images/" + stem + ".pgm";
    v.mask_path = "masks/" + stem + ".pgm";
    save_pgm(out / v.image_path, to_byte(seq.frames[k].image));
    save_mask(out / v.mask_path, seq.frames[k].mask);
    entry.visits.push_back(std::move(v));
  }
  return entry;
}

inline int cmd_register(const Config& cfg, const fs::path& manifest_path, const fs::path& out) {
  const Manifest m = load_manifest(manifest_path);
  m.validate(true, false);
  for (const auto& e : m.eyes)
    for (const auto& v : e.visits)
      if (!v.keypoints_path) throw IoError("register: eye " + e.eye_id + " has a visit without keypoints");
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");

  std::vector<std::optional<EyeRegistration>> results(m.eyes.size());
  std::vector<std::optional<std::string>> errors(m.eyes.size());
  parallel_for(m.eyes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = m.eyes[i];
    try {
      std::vector<VisitInput> visits;
      for (std::size_t k = 0; k < e.visits.size(); ++k) {
        VisitInput v;
        v.visit_id = e.eye_id + "_v" + std::to_string(k);
        v.t = e.visits[k].t;
        v.image = native_crop(cfg, to_byte(load_visit_image(m, e.visits[k])));
        v.keypoints = load_keypoints(m.resolve(*e.visits[k].keypoints_path));
        visits.push_back(std::move(v));
      }
      RegistrationConfig rc = cfg.registration;
      rc.selection.ransac.seed = cfg.seed;
      results[i] = register_eye(e.eye_id, e.laterality, visits, rc);
      if (!results[i]->dropped) write_sequence(results[i]->sequence, out);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  });

  Manifest registered;
  registered.dataset_id = m.dataset_id + "-registered";
  registered.scale = IntensityScale::Byte;
  Json report = tool_header("register");
  auto eyes = Json::array();
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < m.eyes.size(); ++i) {
    Json je;
    je["eye_id"] = m.eyes[i].eye_id;
    if (errors[i]) {
      ++dropped;
      je["dropped"] = true;
      je["reason"] = *errors[i];
      eyes.push_back(std::move(je));
      continue;
    }
    const auto& r = *results[i];
    je["anchor_index"] = r.anchor_index;
    je["dropped"] = r.dropped;
    if (r.dropped) {
      ++dropped;
      je["reason"] = r.drop_reason;
    }
    auto visits = Json::array();
    for (const auto& v : r.visits) visits.push_back(visit_report_json(v));
    je["visits"] = visits;
    eyes.push_back(std::move(je));
    if (r.dropped) continue;
    EyeEntry entry;
    entry.eye_id = r.sequence.eye_id;
    entry.laterality = r.sequence.laterality;
    for (std::size_t k = 0; k < r.sequence.frames.size(); ++k) {
      const std::string stem = r.sequence.eye_id + "_v" + std::to_string(k);
      entry.visits.push_back({r.sequence.frames[k].t, "images/" + stem + ".pgm", "masks/" + stem + ".pgm", std::nullopt});
    }
    registered.eyes.push_back(std::move(entry));
  }
  report["eyes"] = eyes;
  report["mixture_version"] = default_mixture().version;
  write_json(out / "registration_report.json", report);
  save_manifest(out / "manifest.json", registered);
  std::cout << "register: " << registered.eyes.size() << " eyes kept, " << dropped << " dropped\n";
  for (std::size_t i = 0; i < m.eyes.size(); ++i) {
    if (errors[i]) std::cerr << "register: " << m.eyes[i].eye_id << ": " << *errors[i] << "\n";
    else if (results[i]->dropped) std::cerr << "register: " << m.eyes[i].eye_id << ": " << results[i]->drop_reason << "\n";
  }
  if (registered.eyes.empty()) return Fatal;
  return dropped ? Partial : Success;
}

/// Histogram matching and chirality normalization for already-registered data.
inline int cmd_harmonize(const Config& cfg, const fs::path& manifest_path, const fs::path& out) {
  const Manifest m = load_manifest(manifest_path);
  m.validate();
  std::vector<std::optional<std::string>> errors(m.eyes.size());
  std::vector<std::optional<EyeEntry>> entries(m.eyes.size());
  parallel_for(m.eyes.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = m.eyes[i];
    try {
      EyeSequence seq;
      seq.eye_id = e.eye_id;
      seq.laterality = e.laterality;
      for (const auto& v : e.visits) {
        Frame f;
        f.t = v.t;
        f.image = to_byte(load_visit_image(m, v));
        f.mask = load_mask(m.resolve(v.mask_path));
        if (!f.mask.same_shape(f.image)) throw DimensionError("eye " + e.eye_id + ": mask shape differs from image");
        f.image = histogram_match(f.image, f.mask);
        seq.frames.push_back(std::move(f));
      }
      entries[i] = write_sequence(normalize_chirality(seq), out);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  });
  Manifest h;
  h.dataset_id = m.dataset_id + "-harmonized";
  h.scale = IntensityScale::Byte;
  std::vector<EyeFailure> failures;
  for (std::size_t i = 0; i < m.eyes.size(); ++i) {
    if (entries[i]) h.eyes.push_back(std::move(*entries[i]));
    else failures.push_back({m.eyes[i].eye_id, *errors[i]});
  }
  Json report = tool_header("harmonize");
  report["mixture_version"] = default_mixture().version;
  report["eyes"] = h.eyes.size();
  report["failures"] = failures_json(failures);
  write_json(out / "harmonize_report.json", report);
  save_manifest(out / "manifest.json", h);
  std::cout << "harmonize: " << h.eyes.size() << " eyes written\n";
  for (const auto& f : failures) std::cerr << "harmonize: " << f.eye_id << ": " << f.error << "\n";
  if (h.eyes.empty()) return Fatal;
  return failures.empty() ? Success : Partial;
}

// ---------------------------------------------------------------------------
// seg-sweep
// ---------------------------------------------------------------------------

struct MethodDir {
  std::string name;
  fs::path dir;
};

inline int cmd_seg_sweep(const Config& cfg, const fs::path& manifest_path, const std::vector<MethodDir>& methods,
                         const fs::path& out) {
  if (methods.size() < 2) throw ConfigError("seg-sweep: at least 2 method directories are required");
  const Manifest m = load_manifest(manifest_path);
  m.validate();

  std::vector<GrayImage> gt;
  std::vector<MethodPredictions> preds(methods.size());
  std::vector<EyeFailure> failures;
  for (std::size_t j = 0; j < methods.size(); ++j) preds[j].name = methods[j].name;
  for (const auto& e : m.eyes) {
    try {
      GrayImage target = to_unit(load_visit_image(m, e.visits.back()));
      std::vector<GrayImage> row;
      for (const auto& md : methods) {
        const std::string stem = prediction_stem(e.eye_id, e.visits.size() - 1);
        const auto path = find_image(md.dir, stem);
        if (!path) throw MissingPredictionError("method " + md.name + ": no prediction " + stem);
        GrayImage p = to_unit(load_image(*path));
        if (!p.same_shape(target)) throw DimensionError("method " + md.name + ": prediction dimensions differ");
        row.push_back(std::move(p));
      }
      gt.push_back(std::move(target));
      for (std::size_t j = 0; j < methods.size(); ++j) preds[j].predictions.push_back(std::move(row[j]));
    } catch (const Error& ex) {
      failures.push_back({e.eye_id, ex.what()});
    }
  }
  for (const auto& f : failures) std::cerr << "seg-sweep: " << f.eye_id << ": " << f.error << "\n";
  if (gt.empty()) return Fatal;

  const RankTable table = sensitivity_sweep(gt, preds, cfg.sweep, cfg.segmentation);
  CsvTable ranks;
  ranks.header = {"method", "mean_rank", "rank_le2", "rank_ge4", "cells"};
  for (const auto& r : table.rows)
    ranks.rows.push_back({r.method, format_number(r.mean_rank), std::to_string(r.rank_le2_count),
                          std::to_string(r.rank_ge4_count), std::to_string(r.cells)});
  CsvTable cells;
  cells.header = {"cell", "sigma_coef", "cap_frac", "seed_frac"};
  for (const auto& md : methods) {
    cells.header.push_back(md.name + "_dice");
    cells.header.push_back(md.name + "_rank");
  }
  for (std::size_t c = 0; c < table.cells.size(); ++c) {
    const auto& cell = table.cells[c];
    std::vector<std::string> row{std::to_string(c), format_number(cell.sigma_coef), format_number(cell.cap_frac),
                                 format_number(cell.seed_frac)};
    for (std::size_t j = 0; j < methods.size(); ++j) {
      row.push_back(format_number(cell.mean_dice[j]));
      row.push_back(std::to_string(cell.rank[j]));
    }
    cells.rows.push_back(std::move(row));
  }
  write_text_atomic(out / "sweep_ranks.csv", csv_text(ranks));
  write_text_atomic(out / "sweep_cells.csv", csv_text(cells));
  Json j = tool_header("seg-sweep");
  j["cells"] = table.cells.size();
  j["images"] = gt.size();
  j["exclusions"] = table.exclusions.size();
  j["failures"] = failures_json(failures);
  write_json(out / "sweep_report.json", j);

  std::cout << pad_right("Method", 16) << pad_right("Mean Rank", 11) << pad_right("Rank<=2", 9) << "Rank 4-5\n";
  for (const auto& r : table.rows)
    std::cout << pad_right(r.method, 16) << pad_right(fixed(r.mean_rank, 2), 11)
              << pad_right(std::to_string(r.rank_le2_count) + "/" + std::to_string(r.cells), 9)
              << std::to_string(r.rank_ge4_count) + "/" + std::to_string(r.cells) << "\n";
  return failures.empty() ? Success : Partial;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

/// Validates a raw manifest, resolves repeated timestamps by keeping the
/// frame with the highest quality score, and writes a normalized manifest
/// with paths relative to the source manifest's directory made absolute.
inline int cmd_ingest(const Config& cfg, const fs::path& manifest_path, const fs::path& out) {
  Manifest m = load_manifest(manifest_path);
  for (auto& e : m.eyes)
    std::stable_sort(e.visits.begin(), e.visits.end(), [](const VisitEntry& a, const VisitEntry& b) { return a.t < b.t; });
  m.validate(true, false);

  Manifest clean;
  clean.dataset_id = m.dataset_id;
  clean.scale = m.scale;
  Json report = tool_header("ingest");
  auto dups = Json::array();
  std::size_t short_eyes = 0;
  for (const auto& e : m.eyes) {
    EyeEntry ce;
    ce.eye_id = e.eye_id;
    ce.laterality = e.laterality;
    for (std::size_t k = 0; k < e.visits.size();) {
      std::size_t end = k + 1;
      while (end < e.visits.size() && e.visits[end].t == e.visits[k].t) ++end;
      std::size_t best = k;
      if (end - k > 1) {
        double best_score = -1.0;
        auto scores = Json::array();
        for (std::size_t q = k; q < end; ++q) {
          const double s = quality_score(load_visit_image(m, e.visits[q]), cfg.quality_sigma);
          scores.push_back({{"image_path", e.visits[q].image_path}, {"quality_score", s}});
          if (s > best_score) {
            best_score = s;
            best = q;
          }
        }
        dups.push_back({{"eye_id", e.eye_id}, {"t", e.visits[k].t}, {"candidates", scores}, {"kept", e.visits[best].image_path}});
      }
      VisitEntry v = e.visits[best];
      v.image_path = fs::absolute(m.resolve(v.image_path)).lexically_normal().string();
      v.mask_path = fs::absolute(m.resolve(v.mask_path)).lexically_normal().string();
      if (v.keypoints_path) v.keypoints_path = fs::absolute(m.resolve(*v.keypoints_path)).lexically_normal().string();
      ce.visits.push_back(std::move(v));
      k = end;
    }
    if (ce.visits.size() < 2) ++short_eyes;
    clean.eyes.push_back(std::move(ce));
  }
  report["eyes"] = clean.eyes.size();
  report["eyes_with_fewer_than_2_visits"] = short_eyes;
  report["duplicates"] = dups;
  write_json(out / "ingest_report.json", report);
  save_manifest(out / "manifest.json", clean);
  std::cout << "ingest: " << clean.eyes.size() << " eyes, " << dups.size() << " duplicate timestamps resolved\n";
  return Success;
}

}  // namespace longlens::cli
