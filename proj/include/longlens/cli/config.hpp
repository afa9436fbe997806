#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "longlens/atrophy/segmentation.hpp"
#include "longlens/atrophy/sweep.hpp"
#include "longlens/cli/common.hpp"
#include "longlens/diagnostics.hpp"
#include "longlens/metrics.hpp"
#include "longlens/registration/pipeline.hpp"

namespace longlens::cli {

struct PhantomSpec {
  std::size_t n_eyes = 20;
  std::size_t frames_per_eye = 4;
  int image_size = 96;
  double lesion_growth_rate = 2.0;  // px / year on the lesion radius
  double noise_amplitude = 0.05;    // std of the multiplicative illumination field
  double interval_min = 0.1;        // years
  double interval_max = 1.5;
  std::uint64_t rng_seed = 0;
  bool keypoints = false;
  std::size_t keypoints_per_image = 150;
  std::size_t posterior_samples = 0;  // noisy samples of each eye's final visit
  double sample_noise = 0.02;

  void validate() const {
    if (n_eyes == 0 || frames_per_eye == 0) throw ConfigError("phantom: n_eyes and frames_per_eye must be positive");
    if (image_size < 16) throw ConfigError("phantom: image_size must be at least 16");
    if (!(lesion_growth_rate >= 0.0) || !(noise_amplitude >= 0.0) || !(sample_noise >= 0.0))
      throw ConfigError("phantom: rates must be >= 0");
    if (!(interval_min > 0.0 && interval_min <= interval_max)) throw ConfigError("phantom: need 0 < interval_min <= interval_max");
  }
};

/// Everything tunable from --config. Defaults reproduce the published constants.
struct Config {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  SsimConfig ssim{};
  double change_threshold = kDefaultChangedThreshold;
  std::vector<double> stratum_edges{0.25, 1.0};
  SegParams segmentation{};
  SweepGrid sweep{};
  RegistrationConfig registration{};
  std::map<std::string, double> crop_fractions;  // "WxH" -> native center-crop fraction, default 1.0
  std::size_t posterior_k = 10;
  InterSampleMode inter_sample = InterSampleMode::AllPairs;
  double quality_sigma = 16.0;
  PhantomSpec phantom{};
};

namespace detail {

template <class T>
void read_if(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("config: unknown key '" + k + "' in " + where);
}

}  // namespace detail

inline Config config_from_json(const Json& j) {
  Config c;
  try {
    detail::check_keys(j, {"seed", "jobs", "ssim_window", "change_threshold", "stratum_edges", "segmentation", "sweep",
                           "registration", "crop_fractions", "posterior", "quality_sigma", "phantom"},
                       "top level");
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "jobs", c.jobs);
    detail::read_if(j, "ssim_window", c.ssim.window);
    detail::read_if(j, "change_threshold", c.change_threshold);
    detail::read_if(j, "stratum_edges", c.stratum_edges);
    detail::read_if(j, "quality_sigma", c.quality_sigma);
    detail::read_if(j, "crop_fractions", c.crop_fractions);
    if (j.contains("segmentation")) {
      const auto& s = j["segmentation"];
      auto& p = c.segmentation;
      detail::read_if(s, "sigma_coef", p.sigma_coef);
      detail::read_if(s, "cap_frac", p.cap_frac);
      detail::read_if(s, "roi_radius_frac", p.roi_radius_frac);
      detail::read_if(s, "seed_radius_frac", p.seed_radius_frac);
      detail::read_if(s, "min_component_px", p.min_component_px);
      detail::read_if(s, "fundus_floor", p.fundus_floor);
      detail::read_if(s, "threshold_floor", p.threshold_floor);
      detail::read_if(s, "morph_size", p.morph_size);
      if (s.contains("bimodality_dip_threshold")) p.bimodality_dip_threshold = s["bimodality_dip_threshold"].get<double>();
    }
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      detail::read_if(s, "sigma_coefs", c.sweep.sigma_coefs);
      detail::read_if(s, "cap_fracs", c.sweep.cap_fracs);
      detail::read_if(s, "seed_fracs", c.sweep.seed_fracs);
    }
    if (j.contains("registration")) {
      const auto& r = j["registration"];
      auto& reg = c.registration;
      detail::read_if(r, "match_ratio", reg.match_ratio);
      detail::read_if(r, "center_crop", reg.center_crop);
      detail::read_if(r, "harmonize", reg.harmonize);
      detail::read_if(r, "fov_threshold", reg.fov.intensity_threshold);
      detail::read_if(r, "fov_close_size", reg.fov.close_size);
      detail::read_if(r, "promotion_margin", reg.selection.promotion_margin);
      detail::read_if(r, "homography_max_cond", reg.selection.homography_max_cond);
      detail::read_if(r, "homography_max_proj", reg.selection.homography_max_proj);
      detail::read_if(r, "reproj_thresh", reg.selection.ransac.reproj_thresh);
      detail::read_if(r, "confidence", reg.selection.ransac.confidence);
      detail::read_if(r, "max_iterations", reg.selection.ransac.max_iterations);
      detail::read_if(r, "anisotropy_limit", reg.selection.ransac.anisotropy_limit);
      detail::read_if(r, "anisotropy_penalty", reg.selection.ransac.anisotropy_penalty);
      detail::read_if(r, "gate_min_matches", reg.gate.min_matches);
      detail::read_if(r, "gate_min_inliers", reg.gate.min_inliers);
      detail::read_if(r, "gate_max_median_err", reg.gate.max_median_err);
      detail::read_if(r, "gate_min_spread", reg.gate.min_spread);
      detail::read_if(r, "gate_min_score", reg.gate.min_score);
      detail::read_if(r, "anchor_small_fov_frac", reg.anchor.small_fov_frac);
      detail::read_if(r, "anchor_small_fov_factor", reg.anchor.small_fov_factor);
    }
    if (j.contains("posterior")) {
      const auto& p = j["posterior"];
      detail::read_if(p, "k", c.posterior_k);
      if (p.contains("inter_sample")) {
        const auto mode = p["inter_sample"].get<std::string>();
        if (mode == "all_pairs") c.inter_sample = InterSampleMode::AllPairs;
        else if (mode == "sample_vs_mean") c.inter_sample = InterSampleMode::SampleVsMean;
        else throw ConfigError("config: posterior.inter_sample must be all_pairs or sample_vs_mean");
      }
    }
    if (j.contains("phantom")) {
      const auto& p = j["phantom"];
      auto& s = c.phantom;
      detail::read_if(p, "n_eyes", s.n_eyes);
      detail::read_if(p, "frames_per_eye", s.frames_per_eye);
      detail::read_if(p, "image_size", s.image_size);
      detail::read_if(p, "lesion_growth_rate", s.lesion_growth_rate);
      detail::read_if(p, "noise_amplitude", s.noise_amplitude);
      detail::read_if(p, "interval_min", s.interval_min);
      detail::read_if(p, "interval_max", s.interval_max);
      detail::read_if(p, "rng_seed", s.rng_seed);
      detail::read_if(p, "keypoints", s.keypoints);
      detail::read_if(p, "keypoints_per_image", s.keypoints_per_image);
      detail::read_if(p, "posterior_samples", s.posterior_samples);
      detail::read_if(p, "sample_noise", s.sample_noise);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.ssim.validate();
  c.segmentation.validate();
  return c;
}

inline Config load_config(const std::filesystem::path& path) { return config_from_json(read_json(path)); }

}  // namespace longlens::cli
