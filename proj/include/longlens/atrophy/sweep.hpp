#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "longlens/atrophy/mask_metrics.hpp"
#include "longlens/atrophy/segmentation.hpp"
#include "longlens/error.hpp"
#include "longlens/numeric.hpp"
#include "longlens/stats.hpp"

namespace longlens {

/// Cartesian grid over the three sensitivity parameters.
struct SweepGrid {
  std::vector<double> sigma_coefs{1.0, 1.5, 2.0};
  std::vector<double> cap_fracs{0.60, 0.70, 0.80};
  std::vector<double> seed_fracs{0.10, 0.15, 0.20};

  [[nodiscard]] std::size_t cell_count() const { return sigma_coefs.size() * cap_fracs.size() * seed_fracs.size(); }
};

/// One method's predictions, aligned index-for-index with the ground truth list.
struct MethodPredictions {
  std::string name;
  std::vector<GrayImage> predictions;
};

struct SweepExclusion {
  std::size_t cell = 0;
  std::size_t image = 0;
  std::string method;  // empty when the ground-truth segmentation failed
  std::string reason;
};

struct SweepCell {
  double sigma_coef = 0.0;
  double cap_frac = 0.0;
  double seed_frac = 0.0;
  std::vector<double> mean_dice;  // per method; NaN when no image was usable
  std::vector<int> rank;          // competition ranking, 1 = best
};

struct RankRow {
  std::string method;
  double mean_rank = 0.0;
  std::size_t rank_le2_count = 0;
  std::size_t rank_ge4_count = 0;
  std::size_t cells = 0;
};

struct RankTable {
  std::vector<RankRow> rows;
  std::vector<SweepCell> cells;
  std::vector<SweepExclusion> exclusions;
};

/// Competition ranking ("1224") by descending score; NaN ranks last.
inline std::vector<int> competition_ranks(const std::vector<double>& scores) {
  std::vector<int> ranks(scores.size());
  auto key = [](double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int better = 0;
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (key(scores[j]) > key(scores[i])) ++better;
    ranks[i] = better + 1;
  }
  return ranks;
}

/// Segments ground truth and every method's prediction with identical
/// parameters in each grid cell, ranks methods by mean Dice per cell, and
/// aggregates mean rank and rank-frequency counts. Segmentation failures are
/// recorded as exclusions.
inline RankTable sensitivity_sweep(const std::vector<GrayImage>& ground_truth,
                                   const std::vector<MethodPredictions>& methods, const SweepGrid& grid = {},
                                   const SegParams& base = {}) {
  if (methods.empty()) throw EmptyListError("sensitivity_sweep: no methods");
  if (ground_truth.empty()) throw EmptyListError("sensitivity_sweep: no images");
  if (grid.cell_count() == 0) throw ConfigError("sensitivity_sweep: empty grid");
  for (const auto& m : methods) {
    if (m.predictions.size() != ground_truth.size())
      throw DimensionError("sensitivity_sweep: method " + m.name + " does not cover every image");
  }

  RankTable table;
  std::vector<std::vector<int>> ranks_per_method(methods.size());
  std::size_t cell_index = 0;
  for (double sigma : grid.sigma_coefs) {
    for (double cap : grid.cap_fracs) {
      for (double seed_frac : grid.seed_fracs) {
        SegParams p = base;
        p.sigma_coef = sigma;
        p.cap_frac = cap;
        p.seed_radius_frac = seed_frac;
        p.bimodality_dip_threshold.reset();

        std::vector<std::optional<ValidityMask>> gt_masks(ground_truth.size());
        for (std::size_t i = 0; i < ground_truth.size(); ++i) {
          try {
            gt_masks[i] = segment_atrophy(ground_truth[i], p);
          } catch (const Error& e) {
            table.exclusions.push_back({cell_index, i, "", e.what()});
          }
        }

        SweepCell cell{sigma, cap, seed_frac, {}, {}};
        for (const auto& method : methods) {
          std::vector<double> dices;
          for (std::size_t i = 0; i < ground_truth.size(); ++i) {
            if (!gt_masks[i]) continue;
            try {
              dices.push_back(dice(segment_atrophy(method.predictions[i], p), *gt_masks[i]));
            } catch (const Error& e) {
              table.exclusions.push_back({cell_index, i, method.name, e.what()});
            }
          }
          std::sort(dices.begin(), dices.end());
          cell.mean_dice.push_back(dices.empty() ? std::numeric_limits<double>::quiet_NaN() : describe(dices).mean);
        }
        cell.rank = competition_ranks(cell.mean_dice);
        for (std::size_t m = 0; m < methods.size(); ++m) ranks_per_method[m].push_back(cell.rank[m]);
        table.cells.push_back(std::move(cell));
        ++cell_index;
      }
    }
  }

  for (std::size_t m = 0; m < methods.size(); ++m) {
    RankRow row;
    row.method = methods[m].name;
    row.cells = ranks_per_method[m].size();
    double total = 0.0;
    for (int r : ranks_per_method[m]) {
      total += r;
      row.rank_le2_count += r <= 2 ? 1 : 0;
      row.rank_ge4_count += r >= 4 ? 1 : 0;
    }
    row.mean_rank = total / static_cast<double>(row.cells);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace longlens
