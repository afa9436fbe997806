#pragma once

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

inline constexpr std::string_view kRawFloatMagic = "LLFLOAT1";

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

/// Writes through a sibling temp file and renames, so readers never observe
/// a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

inline std::uint32_t read_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw FormatError("PGM: malformed header");
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 24)) throw FormatError("PGM: header value too large");
      ++pos_;
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw FormatError("PGM: truncated header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace detail

inline GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("PGM: bad magic");
  detail::PgmHeaderReader reader(bytes);
  const int width = reader.next_int();
  const int height = reader.next_int();
  const int maxval = reader.next_int();
  if (width <= 0 || height <= 0) throw FormatError("PGM: non-positive dimensions");
  if (maxval != 255) throw FormatError("PGM: maxval must be 255");
  const std::size_t offset = reader.raster_offset();
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < offset + n) throw FormatError("PGM: truncated raster");
  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) px[i] = bytes[offset + i];
  return GrayImage(width, height, IntensityScale::Byte, std::move(px));
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const GrayImage bytes_img = to_byte(img);
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size());
  for (double v : bytes_img.pixels()) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

inline GrayImage decode_llf1(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kRawFloatMagic.data(), 8) != 0)
    throw FormatError("LLF1: bad magic");
  const std::uint32_t width = detail::read_u32_le(bytes.data() + 8);
  const std::uint32_t height = detail::read_u32_le(bytes.data() + 12);
  if (width == 0 || height == 0 || width > (1u << 16) || height > (1u << 16))
    throw FormatError("LLF1: bad dimensions");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() != 16 + 4 * n) throw FormatError("LLF1: payload size mismatch");
  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float f = std::bit_cast<float>(detail::read_u32_le(bytes.data() + 16 + 4 * i));
    if (!(f >= 0.0f && f <= 1.0f)) throw FormatError("LLF1: value outside [0,1]");
    px[i] = f;
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), IntensityScale::Unit, std::move(px));
}

inline std::vector<std::uint8_t> encode_llf1(const GrayImage& img) {
  const GrayImage unit = to_unit(img);
  std::vector<std::uint8_t> out(kRawFloatMagic.begin(), kRawFloatMagic.end());
  out.reserve(16 + 4 * img.size());
  detail::append_u32_le(out, static_cast<std::uint32_t>(img.width()));
  detail::append_u32_le(out, static_cast<std::uint32_t>(img.height()));
  for (double v : unit.pixels()) {
    const auto f = static_cast<float>(std::clamp(v, 0.0, 1.0));
    detail::append_u32_le(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

/// Loads a P5 PGM (Byte scale) or LLF1 raw float file (Unit scale), chosen by
/// magic bytes rather than extension.
inline GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kRawFloatMagic.data(), 8) == 0) return decode_llf1(bytes);
  throw FormatError("unrecognized image format: " + path.string());
}

inline void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  detail::write_file_atomic(path, encode_pgm(img));
}

inline void save_llf1(const std::filesystem::path& path, const GrayImage& img) {
  detail::write_file_atomic(path, encode_llf1(img));
}

/// Byte images go to PGM, Unit images to LLF1.
inline void save_image(const std::filesystem::path& path, const GrayImage& img) {
  if (img.scale() == IntensityScale::Byte) {
    save_pgm(path, img);
  } else {
    save_llf1(path, img);
  }
}

inline ValidityMask load_mask(const std::filesystem::path& path) {
  const GrayImage img = load_image(path);
  ValidityMask m(img.width(), img.height());
  const double half = scale_max(img.scale()) / 2.0;
  for (std::size_t i = 0; i < img.size(); ++i) m.set(i, img[i] > half);
  return m;
}

inline void save_mask(const std::filesystem::path& path, const ValidityMask& mask) {
  GrayImage img(mask.width(), mask.height(), IntensityScale::Byte);
  for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 255.0 : 0.0;
  save_pgm(path, img);
}

}  // namespace longlens
