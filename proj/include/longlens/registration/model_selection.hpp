#pragma once

#include <optional>
#include <string>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/registration/ransac.hpp"

namespace longlens {

struct SelectionParams {
  std::vector<TransformKind> candidates{TransformKind::Similarity, TransformKind::Affine, TransformKind::Homography};
  double promotion_margin = 0.10;
  double homography_max_cond = 3.0;
  double homography_max_proj = 1e-3;  // strict <
  RansacParams ransac{};
};

inline std::string format_threshold(double v) {
  std::string s = std::to_string(v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

/// Homography guard: empty when cond <= max_cond and proj < max_proj,
/// otherwise the rejection reason.
inline std::string homography_guard(const TransformDiagnostics& d, const SelectionParams& p = {}) {
  if (!(d.cond_number <= p.homography_max_cond)) return "cond>" + format_threshold(p.homography_max_cond);
  if (!(d.proj_magnitude < p.homography_max_proj)) return "proj>=" + format_threshold(p.homography_max_proj);
  return {};
}

struct CandidateOutcome {
  TransformKind kind = TransformKind::Similarity;
  std::optional<TransformModel> model;
  std::string rejection;  // empty when the candidate stayed viable
};

struct SelectionResult {
  TransformModel model;
  std::vector<CandidateOutcome> candidates;
};

/// Fits every feasible candidate, applies the homography guards, and walks
/// the candidates from simple to complex, promoting only when the score
/// improves by the promotion margin over the current winner.
inline SelectionResult select_model_detailed(const std::vector<PointPair>& pairs, const SelectionParams& p = {}) {
  SelectionResult out;
  std::optional<TransformModel> winner;
  for (TransformKind kind : p.candidates) {
    CandidateOutcome c;
    c.kind = kind;
    if (pairs.size() < static_cast<std::size_t>(minimal_sample_size(kind))) {
      c.rejection = "too few matches";
      out.candidates.push_back(std::move(c));
      continue;
    }
    try {
      c.model = fit_model_ransac(pairs, kind, p.ransac);
    } catch (const Error& e) {
      c.rejection = e.what();
      out.candidates.push_back(std::move(c));
      continue;
    }
    const auto& d = c.model->diagnostics;
    if (kind == TransformKind::Homography) c.rejection = homography_guard(d, p);
    if (c.rejection.empty()) {
      if (!winner) {
        winner = c.model;
      } else if (d.composite_score >= (1.0 + p.promotion_margin) * winner->diagnostics.composite_score) {
        winner = c.model;
      }
    }
    out.candidates.push_back(std::move(c));
  }
  if (!winner) throw NoViableModelError("no transform candidate survived fitting and guards");
  out.model = *winner;
  return out;
}

inline TransformModel select_model(const std::vector<PointPair>& pairs, const SelectionParams& p = {}) {
  return select_model_detailed(pairs, p).model;
}

struct GateParams {
  std::size_t min_matches = 20;
  std::size_t min_inliers = 10;
  double max_median_err = 1.5;
  double min_spread = 0.05;
  double min_score = 0.03;
};

struct GateDecision {
  bool accepted = false;
  std::vector<std::string> reasons;
};

/// All thresholds are inclusive ("at least" / "at most").
inline GateDecision gate(const TransformDiagnostics& d, std::size_t n_matches, const GateParams& p = {}) {
  GateDecision g;
  if (n_matches < p.min_matches) g.reasons.push_back("matches<" + std::to_string(p.min_matches));
  if (d.inlier_count < p.min_inliers) g.reasons.push_back("inliers<" + std::to_string(p.min_inliers));
  if (!(d.median_reproj_err <= p.max_median_err)) g.reasons.push_back("median_err>" + format_threshold(p.max_median_err));
  if (!(d.hull_spread_frac >= p.min_spread)) g.reasons.push_back("spread<" + format_threshold(p.min_spread));
  if (!(d.composite_score >= p.min_score)) g.reasons.push_back("score<" + format_threshold(p.min_score));
  g.accepted = g.reasons.empty();
  return g;
}

inline GateDecision gate(const TransformModel& m, std::size_t n_matches, const GateParams& p = {}) {
  return gate(m.diagnostics, n_matches, p);
}

struct AnchorCandidate {
  std::size_t keypoint_count_in_fov = 0;
  double fov_area_frac = 0.0;
};

struct AnchorParams {
  double small_fov_frac = 0.35;
  double small_fov_factor = 0.2;
};

inline double anchor_score(const AnchorCandidate& c, const AnchorParams& p = {}) {
  const double base = static_cast<double>(c.keypoint_count_in_fov) * c.fov_area_frac;
  return c.fov_area_frac < p.small_fov_frac ? base * p.small_fov_factor : base;
}

/// Index of the best-scoring visit; ties go to the earliest.
inline std::size_t select_anchor(const std::vector<AnchorCandidate>& visits, const AnchorParams& p = {}) {
  if (visits.empty()) throw EmptyListError("select_anchor: no visits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < visits.size(); ++i)
    if (anchor_score(visits[i], p) > anchor_score(visits[best], p)) best = i;
  return best;
}

}  // namespace longlens
