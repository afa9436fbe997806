#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "longlens/error.hpp"
#include "longlens/geometry/hull.hpp"
#include "longlens/geometry/transform.hpp"
#include "longlens/numeric.hpp"

namespace longlens {

/// A correspondence from the moving image (src) to the fixed image (dst).
struct PointPair {
  Point2d src;
  Point2d dst;
};

struct RansacParams {
  double reproj_thresh = 2.0;
  double confidence = 0.999;
  int max_iterations = 10000;
  int refit_rounds = 5;
  std::uint64_t seed = 0;
  // Hull spread is measured as a fraction of this area (fixed-image space).
  double image_area = 1024.0 * 1024.0;
  double anisotropy_limit = 1.5;
  double anisotropy_penalty = 0.5;
  double proj_limit = 1e-3;
  double proj_penalty = 0.5;
};

namespace detail {

inline double triangle_area2(const Point2d& a, const Point2d& b, const Point2d& c) {
  return std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

/// True when the points do not span two dimensions (all within a line).
inline bool points_collinear(const std::vector<Point2d>& pts, double rel_tol = 1e-9) {
  if (pts.size() < 3) return true;
  Point2d mean{0.0, 0.0};
  for (const auto& p : pts) {
    mean.x += p.x;
    mean.y += p.y;
  }
  mean.x /= static_cast<double>(pts.size());
  mean.y /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector2d d(p.x - mean.x, p.y - mean.y);
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double hi = es.eigenvalues()(1);
  return !(hi > 0.0) || es.eigenvalues()(0) <= rel_tol * hi;
}

inline bool sample_degenerate(const std::vector<PointPair>& pairs, const std::vector<std::size_t>& idx, TransformKind kind) {
  auto coincident = [](const Point2d& a, const Point2d& b) { return std::hypot(a.x - b.x, a.y - b.y) < 1e-9; };
  if (kind == TransformKind::Similarity) {
    return coincident(pairs[idx[0]].src, pairs[idx[1]].src) || coincident(pairs[idx[0]].dst, pairs[idx[1]].dst);
  }
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      for (std::size_t c = b + 1; c < idx.size(); ++c) {
        if (triangle_area2(pairs[idx[a]].src, pairs[idx[b]].src, pairs[idx[c]].src) < 1e-6) return true;
        if (triangle_area2(pairs[idx[a]].dst, pairs[idx[b]].dst, pairs[idx[c]].dst) < 1e-6) return true;
      }
  return false;
}

/// Least squares for x' = a x - b y + tx, y' = b x + a y + ty (centered).
inline std::optional<Eigen::Matrix3d> fit_similarity(const std::vector<PointPair>& pairs, const std::vector<std::size_t>& idx) {
  Point2d ms{0, 0}, md{0, 0};
  for (auto i : idx) {
    ms.x += pairs[i].src.x;
    ms.y += pairs[i].src.y;
    md.x += pairs[i].dst.x;
    md.y += pairs[i].dst.y;
  }
  const double n = static_cast<double>(idx.size());
  ms = {ms.x / n, ms.y / n};
  md = {md.x / n, md.y / n};
  double sxx = 0.0, num_a = 0.0, num_b = 0.0;
  for (auto i : idx) {
    const double x = pairs[i].src.x - ms.x, y = pairs[i].src.y - ms.y;
    const double u = pairs[i].dst.x - md.x, v = pairs[i].dst.y - md.y;
    sxx += x * x + y * y;
    num_a += x * u + y * v;
    num_b += x * v - y * u;
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double a = num_a / sxx, b = num_b / sxx;
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  h(0, 0) = a;
  h(0, 1) = -b;
  h(1, 0) = b;
  h(1, 1) = a;
  h(0, 2) = md.x - (a * ms.x - b * ms.y);
  h(1, 2) = md.y - (b * ms.x + a * ms.y);
  if (std::abs(a) + std::abs(b) < 1e-12) return std::nullopt;
  return h;
}

inline std::optional<Eigen::Matrix3d> fit_affine(const std::vector<PointPair>& pairs, const std::vector<std::size_t>& idx) {
  Point2d ms{0, 0}, md{0, 0};
  for (auto i : idx) {
    ms.x += pairs[i].src.x;
    ms.y += pairs[i].src.y;
    md.x += pairs[i].dst.x;
    md.y += pairs[i].dst.y;
  }
  const double n = static_cast<double>(idx.size());
  ms = {ms.x / n, ms.y / n};
  md = {md.x / n, md.y / n};
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d atb = Eigen::Matrix2d::Zero();
  for (auto i : idx) {
    const Eigen::Vector2d s(pairs[i].src.x - ms.x, pairs[i].src.y - ms.y);
    const Eigen::Vector2d d(pairs[i].dst.x - md.x, pairs[i].dst.y - md.y);
    ata += s * s.transpose();
    atb += s * d.transpose();
  }
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(ata);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::Matrix2d linear = lu.solve(atb).transpose();
  Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
  h.topLeftCorner<2, 2>() = linear;
  h(0, 2) = md.x - (linear(0, 0) * ms.x + linear(0, 1) * ms.y);
  h(1, 2) = md.y - (linear(1, 0) * ms.x + linear(1, 1) * ms.y);
  if (std::abs(linear.determinant()) < 1e-12) return std::nullopt;
  return h;
}

inline Eigen::Matrix3d hartley_normalizer(const std::vector<Point2d>& pts) {
  Point2d m{0, 0};
  for (const auto& p : pts) {
    m.x += p.x;
    m.y += p.y;
  }
  const double n = static_cast<double>(pts.size());
  m = {m.x / n, m.y / n};
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - m.x, p.y - m.y);
  mean_dist /= n;
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * m.x;
  t(1, 2) = -s * m.y;
  return t;
}

inline std::optional<Eigen::Matrix3d> fit_homography(const std::vector<PointPair>& pairs, const std::vector<std::size_t>& idx) {
  std::vector<Point2d> src, dst;
  for (auto i : idx) {
    src.push_back(pairs[i].src);
    dst.push_back(pairs[i].dst);
  }
  const Eigen::Matrix3d ts = hartley_normalizer(src);
  const Eigen::Matrix3d td = hartley_normalizer(dst);
  Eigen::MatrixXd a(2 * idx.size(), 9);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[r].x, src[r].y, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[r].x, dst[r].y, 1.0);
    const double x = s(0) / s(2), y = s(1) / s(2), u = d(0) / d(2), v = d(1) / d(2);
    a.row(static_cast<Eigen::Index>(2 * r)) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(static_cast<Eigen::Index>(2 * r + 1)) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::Matrix3d out = td.inverse() * hn * ts;
  if (std::abs(out(2, 2)) < 1e-15) return std::nullopt;
  out /= out(2, 2);
  if (!out.allFinite() || std::abs(out.topLeftCorner<2, 2>().determinant()) < 1e-12) return std::nullopt;
  return out;
}

inline std::optional<Eigen::Matrix3d> fit_kind(TransformKind kind, const std::vector<PointPair>& pairs,
                                               const std::vector<std::size_t>& idx) {
  switch (kind) {
    case TransformKind::Similarity:
      return fit_similarity(pairs, idx);
    case TransformKind::Affine:
      return fit_affine(pairs, idx);
    case TransformKind::Homography:
      return fit_homography(pairs, idx);
  }
  return std::nullopt;
}

inline double reprojection_error(const Eigen::Matrix3d& h, const PointPair& p) {
  const Point2d q = TransformModel::apply_matrix(h, p.src);
  const double e = std::hypot(q.x - p.dst.x, q.y - p.dst.y);
  return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
}

struct Consensus {
  std::vector<std::size_t> inliers;
  double cost = std::numeric_limits<double>::infinity();
};

inline Consensus consensus(const Eigen::Matrix3d& h, const std::vector<PointPair>& pairs, double thresh) {
  Consensus c;
  c.cost = 0.0;
  const double t2 = thresh * thresh;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = reprojection_error(h, pairs[i]);
    if (e < thresh) c.inliers.push_back(i);
    c.cost += std::min(e * e, t2);
  }
  return c;
}

inline bool better(const Consensus& a, const Consensus& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.cost < b.cost;
}

inline std::size_t adaptive_iterations(std::size_t inliers, std::size_t total, int sample, double confidence, int cap) {
  const double w = static_cast<double>(inliers) / static_cast<double>(total);
  const double ws = std::pow(w, sample);
  if (ws >= 1.0) return 1;
  if (ws <= 0.0) return static_cast<std::size_t>(cap);
  const double n = std::ceil(std::log(1.0 - confidence) / std::log(1.0 - ws));
  if (!std::isfinite(n) || n > cap) return static_cast<std::size_t>(cap);
  return static_cast<std::size_t>(std::max(1.0, n));
}

}  // namespace detail

/// Diagnostics of a fitted matrix over the given correspondences. The
/// composite score is inlier_ratio * hull_spread * exp(-median_err / thresh),
/// halved for each violated guard.
inline TransformDiagnostics compute_diagnostics(const Eigen::Matrix3d& h, TransformKind kind,
                                                const std::vector<PointPair>& pairs, const RansacParams& p) {
  TransformDiagnostics d;
  const auto c = detail::consensus(h, pairs, p.reproj_thresh);
  d.inlier_count = c.inliers.size();
  d.inlier_ratio = pairs.empty() ? 0.0 : static_cast<double>(c.inliers.size()) / static_cast<double>(pairs.size());
  std::vector<double> errs;
  std::vector<Point2d> hull_pts;
  for (auto i : c.inliers) {
    errs.push_back(detail::reprojection_error(h, pairs[i]));
    hull_pts.push_back(pairs[i].dst);
  }
  d.median_reproj_err = errs.empty() ? std::numeric_limits<double>::infinity() : percentile(errs, 0.5);
  d.hull_spread_frac = hull_pts.size() >= 3 ? polygon_area(convex_hull(hull_pts)) / p.image_area : 0.0;
  d.anisotropy = singular_value_ratio(h.topLeftCorner<2, 2>());
  d.cond_number = d.anisotropy;
  d.proj_magnitude = std::max(std::abs(h(2, 0)), std::abs(h(2, 1)));

  double score = errs.empty() ? 0.0 : d.inlier_ratio * d.hull_spread_frac * std::exp(-d.median_reproj_err / p.reproj_thresh);
  if (kind != TransformKind::Similarity && d.anisotropy > p.anisotropy_limit) score *= p.anisotropy_penalty;
  if (d.proj_magnitude >= p.proj_limit) score *= p.proj_penalty;
  d.composite_score = score;
  return d;
}

/// Adaptive RANSAC with MSAC tie-breaking followed by iterated least-squares
/// refits on the inlier set. Deterministic for a given seed.
inline TransformModel fit_model_ransac(const std::vector<PointPair>& pairs, TransformKind kind, const RansacParams& p = {}) {
  const int s = minimal_sample_size(kind);
  if (pairs.size() < static_cast<std::size_t>(s))
    throw InsufficientMatchesError(std::string(to_string(kind)) + " needs at least " + std::to_string(s) + " matches, got " +
                                   std::to_string(pairs.size()));
  if (!(p.reproj_thresh > 0.0) || !(p.confidence > 0.0 && p.confidence < 1.0) || p.max_iterations < 1)
    throw ConfigError("invalid RANSAC parameters");

  if (kind != TransformKind::Similarity) {
    std::vector<Point2d> src, dst;
    for (const auto& pp : pairs) {
      src.push_back(pp.src);
      dst.push_back(pp.dst);
    }
    if (detail::points_collinear(src) || detail::points_collinear(dst))
      throw DegenerateConfigurationError(std::string(to_string(kind)) + ": correspondences are collinear");
  }

  std::mt19937_64 rng(p.seed);
  std::vector<std::size_t> order(pairs.size());
  std::optional<Eigen::Matrix3d> best_h;
  detail::Consensus best;
  std::size_t needed = static_cast<std::size_t>(p.max_iterations);
  std::vector<std::size_t> sample(static_cast<std::size_t>(s));
  for (std::size_t it = 0; it < needed && it < static_cast<std::size_t>(p.max_iterations); ++it) {
    // Partial Fisher-Yates draw of s distinct indices.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t k = 0; k < sample.size(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
      std::swap(order[k], order[pick(rng)]);
      sample[k] = order[k];
    }
    if (detail::sample_degenerate(pairs, sample, kind)) continue;
    const auto h = detail::fit_kind(kind, pairs, sample);
    if (!h) continue;
    auto c = detail::consensus(*h, pairs, p.reproj_thresh);
    if (!best_h || detail::better(c, best)) {
      best = std::move(c);
      best_h = *h;
      needed = detail::adaptive_iterations(best.inliers.size(), pairs.size(), s, p.confidence, p.max_iterations);
    }
  }
  if (!best_h || best.inliers.size() < static_cast<std::size_t>(s))
    throw DegenerateConfigurationError(std::string(to_string(kind)) + ": no non-degenerate minimal sample found");

  Eigen::Matrix3d h = *best_h;
  for (int round = 0; round < p.refit_rounds; ++round) {
    const auto refit = detail::fit_kind(kind, pairs, best.inliers);
    if (!refit) break;
    auto c = detail::consensus(*refit, pairs, p.reproj_thresh);
    if (c.inliers.size() < best.inliers.size()) break;
    const bool same = c.inliers == best.inliers;
    h = *refit;
    best = std::move(c);
    if (same) break;
  }

  TransformModel m = TransformModel::from_matrix(h, kind);
  if (kind != TransformKind::Homography) m.matrix.row(2) << 0.0, 0.0, 1.0;
  m.diagnostics = compute_diagnostics(m.matrix, kind, pairs, p);
  return m;
}

}  // namespace longlens
