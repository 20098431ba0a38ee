#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bnlte/data.hpp"
#include "bnlte/sampler.hpp"
#include "bnlte/spline.hpp"

namespace bnlte {

struct AlignResult {
  Eigen::VectorXd aligned;
  std::optional<double> spearman;  // nonnegative after alignment
  bool flipped = false;
};

// Pseudotime is identifiable up to monotone transformations, so candidate
// orderings are compared by |Spearman|: a negatively correlated candidate is
// flipped to 1 - candidate.
AlignResult align_pseudotime(const Eigen::VectorXd& candidate,
                             const Eigen::VectorXd& reference);

struct AucResult {
  double mean_auc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> per_repeat;
};

// Area under the ROC curve by the Mann-Whitney rank statistic with average
// ranks on ties.
double rank_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

// Repeated stratified k-fold AUC of a logistic model with a spline-expanded
// single feature (a fixed-smoothness GAM). Held-out scores are pooled per
// repeat and scored by the rank statistic; the CI is the percentile interval
// over repeats.
AucResult cross_validated_auc(const Eigen::VectorXd& feature,
                              const std::vector<int>& labels, int folds,
                              int repeats, int spline_df, std::uint64_t seed);

struct EffectTrajectory {
  int child = -1;
  int parent = -1;
  Eigen::VectorXd grid;
  Eigen::VectorXd baseline_mean, baseline_lo, baseline_hi;
  // Index 0/1/2 correspond to the parent's 5th/50th/95th percentile.
  std::array<Eigen::VectorXd, 3> shifted_mean, shifted_lo, shifted_hi;
  std::array<double, 3> parent_quantiles{};
};

// Posterior curves of the child's baseline and of the baseline shifted by
// setting the parent to its 5th/50th/95th percentile, pooled over chains
// (orientation aligned). Bands are pointwise 2.5/97.5 posterior percentiles.
EffectTrajectory effect_trajectories(const std::vector<ChainResult>& chains,
                                     const SplineBasis& basis,
                                     const Dataset& data, int child,
                                     int parent, int grid_size);

// Per-subject table: pooled posterior-mean pseudotime, every variable,
// diagnosis. One row per subject, p + 2 columns.
void export_progression_panel(const PosteriorSummary& summary,
                              const Dataset& data, const std::string& path);

void write_trajectory_csv(const EffectTrajectory& traj,
                          const std::string& path);

}  // namespace bnlte
