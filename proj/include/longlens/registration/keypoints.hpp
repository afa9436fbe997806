#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longlens/error.hpp"
#include "longlens/geometry/hull.hpp"
#include "longlens/registration/letterbox.hpp"

namespace longlens {

inline constexpr std::size_t kDescriptorDim = 256;

/// Keypoints in letterboxed model space with unit-norm descriptors
/// (row-major n x 256).
struct KeypointSet {
  std::string image_id;
  std::vector<Point2d> points;
  std::vector<float> descriptors;
  LetterboxParams letterbox{};

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] const float* descriptor(std::size_t i) const { return descriptors.data() + i * kDescriptorDim; }

  void validate(double norm_tolerance = 1e-4) const {
    if (descriptors.size() != points.size() * kDescriptorDim)
      throw FormatError("keypoints " + image_id + ": descriptor count does not match point count");
    for (std::size_t i = 0; i < points.size(); ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < kDescriptorDim; ++k) sq += static_cast<double>(descriptor(i)[k]) * descriptor(i)[k];
      if (std::abs(std::sqrt(sq) - 1.0) > norm_tolerance)
        throw FormatError("keypoints " + image_id + ": descriptor " + std::to_string(i) + " is not unit norm");
    }
  }
};

namespace base64 {

inline constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t b0 = bytes[i];
    const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
    const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
    out.push_back(kAlphabet[(triple >> 18) & 63]);
    out.push_back(kAlphabet[(triple >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kAlphabet[(triple >> 6) & 63] : '=');
    out.push_back(i + 2 < bytes.size() ? kAlphabet[triple & 63] : '=');
  }
  return out;
}

inline std::vector<std::uint8_t> decode(std::string_view text) {
  std::array<int, 256> lookup{};
  lookup.fill(-1);
  for (std::size_t i = 0; i < kAlphabet.size(); ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    const int v = lookup[static_cast<unsigned char>(c)];
    if (v < 0) throw FormatError("base64: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFFu));
    }
  }
  return out;
}

}  // namespace base64

inline nlohmann::ordered_json keypoints_to_json(const KeypointSet& k) {
  nlohmann::ordered_json j;
  j["image_id"] = k.image_id;
  j["model_space"] = std::to_string(k.letterbox.model_size);
  j["scale"] = k.letterbox.scale;
  j["pad"] = {k.letterbox.pad_x, k.letterbox.pad_y};
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : k.points) pts.push_back({{"x", p.x}, {"y", p.y}});
  j["points"] = pts;
  std::vector<std::uint8_t> bytes;
  bytes.reserve(k.descriptors.size() * 4);
  for (float f : k.descriptors) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>((u >> (8 * b)) & 0xFFu));
  }
  j["descriptors"] = base64::encode(bytes);
  return j;
}

inline KeypointSet keypoints_from_json(const nlohmann::json& j) {
  KeypointSet k;
  try {
    k.image_id = j.at("image_id").get<std::string>();
    const auto& ms = j.at("model_space");
    k.letterbox.model_size = ms.is_string() ? std::stoi(ms.get<std::string>()) : ms.get<int>();
    k.letterbox.scale = j.at("scale").get<double>();
    k.letterbox.pad_x = j.at("pad").at(0).get<int>();
    k.letterbox.pad_y = j.at("pad").at(1).get<int>();
    for (const auto& p : j.at("points")) k.points.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
    const auto bytes = base64::decode(j.at("descriptors").get<std::string>());
    if (bytes.size() % 4 != 0) throw FormatError("keypoints: descriptor payload not a multiple of 4 bytes");
    k.descriptors.resize(bytes.size() / 4);
    for (std::size_t i = 0; i < k.descriptors.size(); ++i) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
      k.descriptors[i] = std::bit_cast<float>(u);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("keypoints: ") + e.what());
  }
  if (!(k.letterbox.scale > 0.0)) throw FormatError("keypoints: scale must be positive");
  k.validate();
  return k;
}

inline KeypointSet load_keypoints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return keypoints_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("keypoints " + path.string() + ": " + e.what());
  }
}

inline void save_keypoints(const std::filesystem::path& path, const KeypointSet& k) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << keypoints_to_json(k).dump() << '\n';
}

}  // namespace longlens
