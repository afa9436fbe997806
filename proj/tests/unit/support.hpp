#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "longlens/raster/image.hpp"

namespace longlens::testing {

inline GrayImage random_unit_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayImage img(w, h, IntensityScale::Unit);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
  return img;
}

inline GrayImage random_byte_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  GrayImage img(w, h, IntensityScale::Byte);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = u(rng);
  return img;
}

inline ValidityMask random_mask(int w, int h, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p);
  ValidityMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, b(rng));
  return m;
}

inline ValidityMask disc_mask(int w, int h, double cx, double cy, double r) {
  ValidityMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, std::hypot(x - cx, y - cy) <= r);
  return m;
}

inline ValidityMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
  ValidityMask m(w, h);
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x) m.set(x, y, true);
  return m;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("longlens_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace longlens::testing
