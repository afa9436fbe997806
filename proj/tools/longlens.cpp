// longlens command-line driver.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longlens/cli/commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace longlens;
using namespace longlens::cli;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string out;
};

Config resolve_config(const Globals& g) {
  Config cfg = g.config_path.empty() ? Config{} : load_config(g.config_path);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.phantom.rng_seed = *g.seed;
  }
  if (g.jobs) cfg.jobs = std::max(1u, *g.jobs);
  return cfg;
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw ConfigError("--out is required for this command");
  return g.out;
}

std::vector<MethodDir> parse_methods(const std::vector<std::string>& specs) {
  std::vector<MethodDir> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--method expects NAME=DIR, got '" + s + "'");
    out.push_back({s.substr(0, eq), s.substr(eq + 1)});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"longlens: longitudinal image diagnostics, metrics, and registration"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "RNG seed (overrides config)");
  app.add_option("--jobs", g.jobs, "worker threads (default 1)");
  app.add_option("--out", g.out, "output directory");

  std::string manifest, pred_dir, samples_dir, method = "method", csv_a, csv_b, baseline_kind;
  std::vector<std::string> metrics, method_specs;
  std::optional<std::size_t> k_override;
  PhantomSpec ph_cli;
  bool ph_keypoints = false;
  std::optional<std::size_t> ph_eyes, ph_frames, ph_samples;
  std::optional<int> ph_size;
  std::optional<double> ph_growth, ph_noise, ph_imin, ph_imax;
  std::vector<double> grid_sigma, grid_cap, grid_seed;

  auto* evaluate = app.add_subcommand("evaluate", "metric suite for predictions of each eye's final visit");
  evaluate->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  evaluate->add_option("predictions", pred_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--method", method, "method name used for output files");

  auto* compare = app.add_subcommand("compare", "paired Wilcoxon comparison of two metric CSVs");
  compare->add_option("csv_a", csv_a)->required()->check(CLI::ExistingFile);
  compare->add_option("csv_b", csv_b)->required()->check(CLI::ExistingFile);
  compare->add_option("--metrics", metrics, "metric columns (default: all)")->delimiter(',');

  auto* entropy = app.add_subcommand("entropy", "task-entropy report over adjacent visit pairs");
  entropy->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

  auto* posterior = app.add_subcommand("posterior", "bias-variance decomposition of K samples per eye");
  posterior->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  posterior->add_option("samples", samples_dir)->required()->check(CLI::ExistingDirectory);
  posterior->add_option("-k,--k", k_override, "samples per eye (default 10)");

  auto* reg = app.add_subcommand("register", "keypoint registration, gating, warping and harmonization");
  reg->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

  auto* harmonize = app.add_subcommand("harmonize", "histogram matching and chirality normalization");
  harmonize->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("seg-sweep", "segmentation-parameter sensitivity sweep");
  sweep->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  sweep->add_option("--method", method_specs, "NAME=DIR, repeat for each method")->required();
  sweep->add_option("--grid-sigma", grid_sigma)->delimiter(',');
  sweep->add_option("--grid-cap", grid_cap)->delimiter(',');
  sweep->add_option("--grid-seed", grid_seed)->delimiter(',');

  auto* phantom = app.add_subcommand("phantom", "synthetic longitudinal dataset");
  phantom->add_option("--eyes", ph_eyes);
  phantom->add_option("--frames", ph_frames);
  phantom->add_option("--size", ph_size);
  phantom->add_option("--growth", ph_growth, "lesion radius growth, px/year");
  phantom->add_option("--noise", ph_noise, "multiplicative illumination noise std");
  phantom->add_option("--interval-min", ph_imin);
  phantom->add_option("--interval-max", ph_imax);
  phantom->add_option("--samples", ph_samples, "posterior samples per eye");
  phantom->add_flag("--keypoints", ph_keypoints, "emit keypoint files");

  auto* baseline = app.add_subcommand("baseline", "reference predictors for each eye's final visit");
  baseline->add_option("kind", baseline_kind)->required()->check(CLI::IsMember({"copy-last", "spline"}));
  baseline->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

  auto* ingest = app.add_subcommand("ingest", "validate and normalize a manifest");
  ingest->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Success : Fatal;
  }

  try {
    Config cfg = resolve_config(g);
    if (*evaluate) return cmd_evaluate(cfg, manifest, pred_dir, method, require_out(g));
    if (*compare) return cmd_compare(cfg, csv_a, csv_b, metrics, require_out(g));
    if (*entropy) return cmd_entropy(cfg, manifest, require_out(g));
    if (*posterior) {
      if (k_override) cfg.posterior_k = *k_override;
      return cmd_posterior(cfg, manifest, samples_dir, require_out(g));
    }
    if (*reg) return cmd_register(cfg, manifest, require_out(g));
    if (*harmonize) return cmd_harmonize(cfg, manifest, require_out(g));
    if (*sweep) {
      if (!grid_sigma.empty()) cfg.sweep.sigma_coefs = grid_sigma;
      if (!grid_cap.empty()) cfg.sweep.cap_fracs = grid_cap;
      if (!grid_seed.empty()) cfg.sweep.seed_fracs = grid_seed;
      return cmd_seg_sweep(cfg, manifest, parse_methods(method_specs), require_out(g));
    }
    if (*phantom) {
      auto& s = cfg.phantom;
      if (ph_eyes) s.n_eyes = *ph_eyes;
      if (ph_frames) s.frames_per_eye = *ph_frames;
      if (ph_size) s.image_size = *ph_size;
      if (ph_growth) s.lesion_growth_rate = *ph_growth;
      if (ph_noise) s.noise_amplitude = *ph_noise;
      if (ph_imin) s.interval_min = *ph_imin;
      if (ph_imax) s.interval_max = *ph_imax;
      if (ph_samples) s.posterior_samples = *ph_samples;
      if (ph_keypoints) s.keypoints = true;
      return cmd_phantom(cfg, require_out(g));
    }
    if (*baseline)
      return cmd_baseline(cfg, baseline_kind == "copy-last" ? BaselineKind::CopyLast : BaselineKind::Spline, manifest,
                          require_out(g));
    if (*ingest) return cmd_ingest(cfg, manifest, require_out(g));
  } catch (const longlens::Error& e) {
    std::cerr << "longlens: " << e.what() << "\n";
    return Fatal;
  } catch (const std::exception& e) {
    std::cerr << "longlens: unexpected error: " << e.what() << "\n";
    return Fatal;
  }
  return Fatal;
}
