#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "longlens/error.hpp"
#include "longlens/geometry/hull.hpp"

namespace longlens {

enum class TransformKind { Similarity, Affine, Homography };

inline std::string_view to_string(TransformKind k) {
  switch (k) {
    case TransformKind::Similarity:
      return "similarity";
    case TransformKind::Affine:
      return "affine";
    case TransformKind::Homography:
      return "homography";
  }
  return "unknown";
}

inline TransformKind transform_kind_from_string(std::string_view s) {
  if (s == "similarity") return TransformKind::Similarity;
  if (s == "affine") return TransformKind::Affine;
  if (s == "homography") return TransformKind::Homography;
  throw ConfigError("unknown transform kind: " + std::string(s));
}

inline int minimal_sample_size(TransformKind k) {
  switch (k) {
    case TransformKind::Similarity:
      return 2;
    case TransformKind::Affine:
      return 3;
    case TransformKind::Homography:
      return 4;
  }
  return 4;
}

struct TransformDiagnostics {
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;
  double median_reproj_err = 0.0;  // pixels, over inliers
  double hull_spread_frac = 0.0;   // inlier convex hull area / image area
  double composite_score = 0.0;
  double anisotropy = 1.0;         // singular value ratio of the linear part
  double cond_number = 1.0;
  double proj_magnitude = 0.0;     // max(|h31|, |h32|)
};

/// Projective 3x3 transform mapping source pixel coordinates to destination
/// coordinates, normalized so h33 == 1.
struct TransformModel {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  TransformKind kind = TransformKind::Similarity;
  TransformDiagnostics diagnostics{};

  static TransformModel identity(TransformKind k = TransformKind::Similarity) {
    TransformModel m;
    m.kind = k;
    return m;
  }

  static TransformModel from_matrix(const Eigen::Matrix3d& h, TransformKind k) {
    TransformModel m;
    if (std::abs(h(2, 2)) < 1e-15) throw SingularTransformError("h33 is zero; cannot normalize");
    m.matrix = h / h(2, 2);
    m.kind = k;
    return m;
  }

  [[nodiscard]] Eigen::Matrix2d linear_part() const { return matrix.topLeftCorner<2, 2>(); }

  [[nodiscard]] Point2d apply(const Point2d& p) const { return apply_matrix(matrix, p); }

  static Point2d apply_matrix(const Eigen::Matrix3d& h, const Point2d& p) {
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
  }
};

/// Ratio of the larger to the smaller singular value of a 2x2 matrix.
inline double singular_value_ratio(const Eigen::Matrix2d& a) {
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(a);
  const auto s = svd.singularValues();
  if (s(1) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(1);
}

inline void require_invertible(const Eigen::Matrix3d& h) {
  const double det_linear = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
  if (std::abs(det_linear) < 1e-12 || std::abs(h.determinant()) < 1e-12) {
    throw SingularTransformError("transform is not invertible");
  }
}

}  // namespace longlens
