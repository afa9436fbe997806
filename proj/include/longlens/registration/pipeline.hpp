#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "longlens/error.hpp"
#include "longlens/raster/image.hpp"
#include "longlens/raster/warp.hpp"
#include "longlens/registration/fov.hpp"
#include "longlens/registration/harmonize.hpp"
#include "longlens/registration/keypoints.hpp"
#include "longlens/registration/letterbox.hpp"
#include "longlens/registration/matching.hpp"
#include "longlens/registration/model_selection.hpp"
#include "longlens/temporal.hpp"

namespace longlens {

struct VisitInput {
  std::string visit_id;
  double t = 0.0;
  GrayImage image;  // Byte
  KeypointSet keypoints;
};

struct RegistrationConfig {
  FovParams fov{};
  double match_ratio = 0.85;
  SelectionParams selection{};
  GateParams gate{};
  AnchorParams anchor{};
  double center_crop = 0.80;
  bool harmonize = true;
  bool normalize_chirality = true;
};

struct VisitReport {
  std::string visit_id;
  double t = 0.0;
  bool is_anchor = false;
  std::size_t keypoints_in_fov = 0;
  double fov_area_frac = 0.0;
  std::size_t n_matches = 0;
  std::optional<TransformModel> model;   // moving model space -> anchor model space
  std::optional<Eigen::Matrix3d> crop_matrix;  // visit crop -> anchor crop
  GateDecision decision;
  bool survived = false;
  std::string note;
};

struct EyeRegistration {
  std::string eye_id;
  std::size_t anchor_index = 0;
  std::vector<VisitReport> visits;
  EyeSequence sequence;  // surviving visits, chronological, Byte images
  bool dropped = false;
  std::string drop_reason;
};

/// Keypoints whose crop-space location falls inside the FOV mask.
inline std::size_t keypoints_in_mask(const KeypointSet& k, const ValidityMask& mask) {
  std::size_t n = 0;
  for (const auto& p : k.points) {
    const Point2d c = k.letterbox.to_crop(p);
    const auto x = static_cast<int>(std::lround(c.x));
    const auto y = static_cast<int>(std::lround(c.y));
    n += mask.get_or_false(x, y) ? 1 : 0;
  }
  return n;
}

/// Registers every visit of one eye onto its anchor: anchor choice, matching,
/// model selection, gating, warping, duplicate-timestamp resolution, center
/// crop, histogram matching and chirality normalization. Visits are
/// independent once the anchor is known, and the result does not depend on
/// evaluation order.
inline EyeRegistration register_eye(const std::string& eye_id, Laterality laterality, const std::vector<VisitInput>& visits,
                                    const RegistrationConfig& cfg = {}, const MixtureReference& ref = default_mixture()) {
  if (visits.empty()) throw EmptyListError("register_eye: eye " + eye_id + " has no visits");
  EyeRegistration out;
  out.eye_id = eye_id;

  std::vector<ValidityMask> fov;
  std::vector<AnchorCandidate> candidates;
  for (const auto& v : visits) {
    if (v.image.scale() != IntensityScale::Byte) throw ScaleError("register_eye: visit images must be Byte scale");
    fov.push_back(estimate_fov_mask(v.image, cfg.fov));
    VisitReport r;
    r.visit_id = v.visit_id;
    r.t = v.t;
    r.keypoints_in_fov = keypoints_in_mask(v.keypoints, fov.back());
    r.fov_area_frac = static_cast<double>(fov.back().valid_count()) / static_cast<double>(fov.back().size());
    candidates.push_back({r.keypoints_in_fov, r.fov_area_frac});
    out.visits.push_back(std::move(r));
  }
  out.anchor_index = select_anchor(candidates, cfg.anchor);
  const VisitInput& anchor = visits[out.anchor_index];
  const int aw = anchor.image.width(), ah = anchor.image.height();
  const auto& alb = anchor.keypoints.letterbox;

  SelectionParams sel = cfg.selection;
  sel.ransac.image_area = (aw * alb.scale) * (ah * alb.scale);

  std::vector<GrayImage> warped(visits.size());
  std::vector<ValidityMask> warped_mask(visits.size());
  for (std::size_t i = 0; i < visits.size(); ++i) {
    VisitReport& r = out.visits[i];
    if (i == out.anchor_index) {
      r.is_anchor = true;
      r.model = TransformModel::identity();
      r.crop_matrix = Eigen::Matrix3d::Identity();
      r.decision.accepted = true;
      r.survived = true;
      warped[i] = anchor.image;
      warped_mask[i] = fov[i];
      continue;
    }
    const auto matches = match_descriptors(visits[i].keypoints, anchor.keypoints, cfg.match_ratio);
    r.n_matches = matches.size();
    std::vector<PointPair> pairs;
    pairs.reserve(matches.size());
    for (const auto& m : matches) pairs.push_back({visits[i].keypoints.points[m.index_a], anchor.keypoints.points[m.index_b]});
    try {
      r.model = select_model(pairs, sel);
      r.decision = gate(*r.model, r.n_matches, cfg.gate);
    } catch (const Error& e) {
      r.decision = gate(TransformDiagnostics{0, 0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0, 1.0, 1.0, 0.0},
                        r.n_matches, cfg.gate);
      r.note = e.what();
    }
    if (!r.decision.accepted) continue;
    try {
      const Eigen::Matrix3d h = model_to_crop_transform(r.model->matrix, visits[i].keypoints.letterbox, alb);
      require_invertible(h);
      r.crop_matrix = h;
      const TransformModel t = TransformModel::from_matrix(h, r.model->kind);
      warped[i] = warp_bilinear(visits[i].image, t, {aw, ah});
      warped_mask[i] = mask_and(warp_mask(fov[i], t, {aw, ah}), fov[out.anchor_index]);
      r.survived = warped_mask[i].any();
      if (!r.survived) r.note = "warped mask is empty";
    } catch (const Error& e) {
      r.note = e.what();
    }
  }

  // Duplicate timestamps: keep the highest composite score (the anchor always wins).
  auto score_of = [&](std::size_t i) {
    return out.visits[i].is_anchor ? std::numeric_limits<double>::infinity() : out.visits[i].model->diagnostics.composite_score;
  };
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < visits.size(); ++i)
    if (out.visits[i].survived) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return visits[a].t < visits[b].t; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (!kept.empty() && visits[kept.back()].t == visits[i].t) {
      std::size_t loser = i;
      if (score_of(i) > score_of(kept.back())) {
        loser = kept.back();
        kept.back() = i;
      }
      out.visits[loser].survived = false;
      out.visits[loser].note = "duplicate timestamp with a higher-scoring visit";
      continue;
    }
    kept.push_back(i);
  }

  const Rect crop_rect = center_crop_rect(aw, ah, cfg.center_crop);
  EyeSequence seq;
  seq.eye_id = eye_id;
  seq.laterality = laterality;
  for (std::size_t i : kept) {
    Frame f;
    f.t = visits[i].t;
    f.mask = crop(warped_mask[i], crop_rect);
    f.image = crop(warped[i], crop_rect);
    if (!f.mask.any()) {
      out.visits[i].survived = false;
      out.visits[i].note = "mask empty after center crop";
      continue;
    }
    if (cfg.harmonize) f.image = histogram_match(f.image, f.mask, ref);
    seq.frames.push_back(std::move(f));
  }

  if (cfg.normalize_chirality) {
    try {
      seq = normalize_chirality(seq);
    } catch (const UnknownLateralityError& e) {
      out.dropped = true;
      out.drop_reason = e.what();
    }
  }
  if (!out.dropped && seq.frames.size() < 2) {
    out.dropped = true;
    out.drop_reason = "fewer than 2 surviving visits";
  }
  out.sequence = std::move(seq);
  return out;
}

}  // namespace longlens
