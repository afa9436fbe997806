#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/raster/image.hpp"

namespace longlens {

enum class Laterality { Left, Right, Unknown };

inline std::string_view to_string(Laterality l) {
  switch (l) {
    case Laterality::Left:
      return "L";
    case Laterality::Right:
      return "R";
    case Laterality::Unknown:
      return "unknown";
  }
  return "unknown";
}

inline Laterality laterality_from_string(std::string_view s) {
  if (s == "L" || s == "l" || s == "left" || s == "Left" || s == "OS") return Laterality::Left;
  if (s == "R" || s == "r" || s == "right" || s == "Right" || s == "OD") return Laterality::Right;
  return Laterality::Unknown;
}

struct Frame {
  GrayImage image;
  ValidityMask mask;
  double t = 0.0;  // years since first visit
};

/// One eye's registered visits in chronological order.
struct EyeSequence {
  std::string eye_id;
  std::vector<Frame> frames;
  Laterality laterality = Laterality::Unknown;

  /// Throws if times are not strictly increasing or frame shapes disagree.
  void validate() const {
    if (frames.empty()) throw EmptySequenceError("eye " + eye_id + " has no frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (!frames[i].image.same_shape(frames.front().image) || !frames[i].mask.same_shape(frames[i].image))
        throw DimensionError("eye " + eye_id + ": frame dimensions differ");
      if (i > 0 && !(frames[i].t > frames[i - 1].t))
        throw DegenerateTimesError("eye " + eye_id + ": visit times must be strictly increasing");
    }
  }
};

/// Copy-last baseline: the most recent history frame, unchanged.
inline GrayImage copy_last(const EyeSequence& seq, double t_star) {
  if (seq.frames.empty()) throw EmptySequenceError("copy_last: empty sequence");
  if (t_star < seq.frames.back().t) throw DegenerateTimesError("copy_last: target precedes last visit");
  return seq.frames.back().image;
}

/// Two-point per-pixel line through the last two frames, evaluated at t_star
/// and clamped to the image's intensity range.
inline GrayImage linear_spline(const EyeSequence& seq, double t_star) {
  if (seq.frames.size() < 2) throw InsufficientHistoryError("linear_spline: needs at least two frames");
  const Frame& prev = seq.frames[seq.frames.size() - 2];
  const Frame& last = seq.frames.back();
  if (!(last.t > prev.t)) throw DegenerateTimesError("linear_spline: last two visits share a timestamp");
  if (!prev.image.same_shape(last.image) || prev.image.scale() != last.image.scale())
    throw DimensionError("linear_spline: frame shapes differ");

  const double ratio = (t_star - last.t) / (last.t - prev.t);
  const double hi = scale_max(last.image.scale());
  GrayImage out(last.image.width(), last.image.height(), last.image.scale());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = last.image[i] + (last.image[i] - prev.image[i]) * ratio;
    out[i] = std::clamp(v, 0.0, hi);
  }
  return out;
}

inline constexpr int kDeltaEmbeddingPairs = 128;
inline constexpr int kDeltaEmbeddingDim = 2 * kDeltaEmbeddingPairs;

/// Log-uniform frequency ladder from 1 down to 1/100.
inline double delta_frequency(int i) {
  return std::exp(-static_cast<double>(i) * std::log(100.0) / (kDeltaEmbeddingPairs - 1));
}

struct DeltaEmbedding {
  std::array<double, kDeltaEmbeddingDim> values{};
};

/// Sinusoidal encoding of a time gap: interleaved sin/cos of log(1 + dt) * f_i.
inline DeltaEmbedding delta_embedding(double delta_t) {
  if (!(delta_t >= 0.0)) throw NegativeDeltaError("delta_embedding: delta_t must be >= 0");
  DeltaEmbedding e;
  const double phase = std::log1p(delta_t);
  for (int i = 0; i < kDeltaEmbeddingPairs; ++i) {
    const double arg = phase * delta_frequency(i);
    e.values[static_cast<std::size_t>(2 * i)] = std::sin(arg);
    e.values[static_cast<std::size_t>(2 * i + 1)] = std::cos(arg);
  }
  return e;
}

}  // namespace longlens
