#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "longlens/cli/config.hpp"
#include "longlens/cli/manifest.hpp"
#include "longlens/raster/io.hpp"
#include "longlens/registration/keypoints.hpp"
#include "longlens/registration/letterbox.hpp"

namespace longlens::cli {

inline constexpr double kPhantomFundusRadius = 0.45;  // fraction of image size
inline constexpr double kPhantomLesionLevel = 0.15;

/// Geometry of one synthetic eye; images are rendered from this per visit.
struct PhantomEye {
  std::string eye_id;
  Laterality laterality = Laterality::Right;
  std::vector<double> times;
  double lesion_cx = 0.0;
  double lesion_cy = 0.0;
  double lesion_r0 = 0.0;
  std::vector<Point2d> landmarks;
  std::vector<float> descriptors;
};

struct PhantomVisit {
  GrayImage image;       // Unit
  ValidityMask fov;
  ValidityMask lesion;
};

inline std::string phantom_eye_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "eye" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

inline std::mt19937_64 phantom_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

inline PhantomEye make_phantom_eye(const PhantomSpec& spec, std::size_t index) {
  auto rng = phantom_rng(spec.rng_seed, index);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double s = spec.image_size;
  const double c = (s - 1.0) / 2.0;
  PhantomEye e;
  e.eye_id = phantom_eye_id(index);
  e.laterality = index % 2 == 0 ? Laterality::Right : Laterality::Left;
  double t = 0.0;
  for (std::size_t k = 0; k < spec.frames_per_eye; ++k) {
    if (k > 0) t += spec.interval_min + (spec.interval_max - spec.interval_min) * u01(rng);
    e.times.push_back(t);
  }
  const double ang = 2.0 * M_PI * u01(rng);
  const double off = 0.04 * s * std::sqrt(u01(rng));
  e.lesion_cx = c + off * std::cos(ang);
  e.lesion_cy = c + off * std::sin(ang);
  e.lesion_r0 = s * (0.14 + 0.02 * u01(rng));

  if (spec.keypoints) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double reach = 0.9 * kPhantomFundusRadius * s;
    for (std::size_t k = 0; k < spec.keypoints_per_image; ++k) {
      const double a = 2.0 * M_PI * u01(rng);
      const double r = reach * std::sqrt(u01(rng));
      e.landmarks.push_back({c + r * std::cos(a), c + r * std::sin(a)});
      std::array<double, kDescriptorDim> d{};
      double norm = 0.0;
      for (auto& v : d) {
        v = gauss(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (double v : d) e.descriptors.push_back(static_cast<float>(v / norm));
    }
  }
  return e;
}

inline double phantom_lesion_radius(const PhantomSpec& spec, const PhantomEye& e, double t) {
  return std::min(e.lesion_r0 + spec.lesion_growth_rate * t, 0.35 * spec.image_size);
}

/// Noise-free rendering of a right-eye phantom at time t.
inline PhantomVisit render_phantom_clean(const PhantomSpec& spec, const PhantomEye& e, double t) {
  const int n = spec.image_size;
  const double c = (n - 1.0) / 2.0;
  const double fundus_r = kPhantomFundusRadius * n;
  const double lesion_r = phantom_lesion_radius(spec, e, t);
  PhantomVisit v{GrayImage(n, n, IntensityScale::Unit), ValidityMask(n, n), ValidityMask(n, n)};
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double rr = std::hypot(x - c, y - c);
      if (rr > fundus_r) continue;
      v.fov.set(x, y, true);
      const bool in_lesion = std::hypot(x - e.lesion_cx, y - e.lesion_cy) <= lesion_r;
      v.lesion.set(x, y, in_lesion);
      const double q = rr / fundus_r;
      v.image.at(x, y) = in_lesion ? kPhantomLesionLevel : 0.75 * (1.0 - 0.15 * q * q);
    }
  }
  return v;
}

/// Unit-variance multiplicative field: smooth plane waves plus per-pixel speckle.
inline std::vector<double> phantom_noise_field(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr int kWaves = 4;
  std::array<std::array<double, 3>, kWaves> waves{};
  for (auto& w : waves) {
    const double ang = 2.0 * M_PI * u01(rng);
    const double freq = 2.0 * M_PI * (0.5 + 1.5 * u01(rng)) / n;
    w = {freq * std::cos(ang), freq * std::sin(ang), 2.0 * M_PI * u01(rng)};
  }
  std::vector<double> f(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double smooth = 0.0;
      for (const auto& w : waves) smooth += std::cos(w[0] * x + w[1] * y + w[2]);
      smooth *= std::sqrt(2.0 / kWaves);
      f[static_cast<std::size_t>(y) * static_cast<std::size_t>(n) + static_cast<std::size_t>(x)] =
          (smooth + gauss(rng)) / std::sqrt(2.0);
    }
  }
  return f;
}

inline PhantomVisit render_phantom_visit(const PhantomSpec& spec, const PhantomEye& e, std::size_t eye_index, std::size_t k) {
  PhantomVisit v = render_phantom_clean(spec, e, e.times[k]);
  if (spec.noise_amplitude > 0.0) {
    auto rng = phantom_rng(spec.rng_seed, eye_index, 1000 + k);
    const auto field = phantom_noise_field(spec.image_size, rng);
    for (std::size_t i = 0; i < v.image.size(); ++i)
      if (v.fov[i]) v.image[i] = std::clamp(v.image[i] * (1.0 + spec.noise_amplitude * field[i]), 0.0, 1.0);
  }
  return v;
}

inline KeypointSet phantom_keypoints(const PhantomSpec& spec, const PhantomEye& e, const std::string& image_id) {
  KeypointSet k;
  k.image_id = image_id;
  k.letterbox = letterbox_params(spec.image_size, spec.image_size);
  for (const auto& p : e.landmarks) {
    Point2d q = p;
    if (e.laterality == Laterality::Left) q.x = spec.image_size - 1.0 - q.x;
    k.points.push_back(k.letterbox.to_model(q));
  }
  k.descriptors = e.descriptors;
  return k;
}

/// Writes images, FOV masks, ground-truth lesion masks, optional keypoints
/// and posterior samples, and the manifest. Left eyes are stored mirrored.
inline Manifest write_phantom_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  for (const char* sub : {"images", "masks", "lesions"}) fs::create_directories(out_dir / sub);
  if (spec.keypoints) fs::create_directories(out_dir / "keypoints");
  if (spec.posterior_samples > 0) fs::create_directories(out_dir / "samples");

  Manifest m;
  m.dataset_id = "phantom-" + std::to_string(spec.rng_seed);
  m.scale = IntensityScale::Byte;
  m.root = out_dir;
  for (std::size_t i = 0; i < spec.n_eyes; ++i) {
    const PhantomEye e = make_phantom_eye(spec, i);
    EyeEntry entry;
    entry.eye_id = e.eye_id;
    entry.laterality = e.laterality;
    const bool left = e.laterality == Laterality::Left;
    for (std::size_t k = 0; k < e.times.size(); ++k) {
      PhantomVisit v = render_phantom_visit(spec, e, i, k);
      if (left) {
        v.image = flip_horizontal(v.image);
        v.fov = flip_horizontal(v.fov);
        v.lesion = flip_horizontal(v.lesion);
      }
      const std::string stem = e.eye_id + "_v" + std::to_string(k);
      VisitEntry ve;
      ve.t = e.times[k];
      ve.image_path = "images/" + stem + ".pgm";
      ve.mask_path = "masks/" + stem + ".pgm";
      save_pgm(out_dir / ve.image_path, to_byte(v.image));
      save_mask(out_dir / ve.mask_path, v.fov);
      save_mask(out_dir / "lesions" / (stem + ".pgm"), v.lesion);
      if (spec.keypoints) {
        ve.keypoints_path = "keypoints/" + stem + ".json";
        const auto kp = phantom_keypoints(spec, e, stem);
        write_text_atomic(out_dir / *ve.keypoints_path, keypoints_to_json(kp).dump() + "\n");
      }
      entry.visits.push_back(std::move(ve));
    }
    if (spec.posterior_samples > 0) {
      PhantomVisit clean = render_phantom_clean(spec, e, e.times.back());
      if (left) clean.image = flip_horizontal(clean.image);
      auto rng = phantom_rng(spec.rng_seed, i, 5000);
      std::normal_distribution<double> gauss(0.0, spec.sample_noise);
      for (std::size_t s = 0; s < spec.posterior_samples; ++s) {
        GrayImage sample = clean.image;
        for (std::size_t p = 0; p < sample.size(); ++p) sample[p] = std::clamp(sample[p] + gauss(rng), 0.0, 1.0);
        save_llf1(out_dir / "samples" / (e.eye_id + "_s" + std::to_string(s) + ".llf1"), sample);
      }
    }
    m.eyes.push_back(std::move(entry));
  }
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace longlens::cli
