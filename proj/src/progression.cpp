#include "bnlte/progression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bnlte/io.hpp"
#include "bnlte/rng.hpp"
#include "bnlte/stats.hpp"

namespace bnlte {

AlignResult align_pseudotime(const Eigen::VectorXd& candidate,
                             const Eigen::VectorXd& reference) {
  if (candidate.size() != reference.size()) {
    throw std::invalid_argument("align_pseudotime: length mismatch");
  }
  AlignResult out;
  const auto rho = spearman_correlation(candidate, reference);
  if (!rho) {
    out.aligned = candidate;
    out.spearman = std::nullopt;
    return out;
  }
  if (*rho < 0.0) {
    out.aligned = (1.0 - candidate.array()).matrix();
    out.flipped = true;
    out.spearman = -*rho;
  } else {
    out.aligned = candidate;
    out.spearman = *rho;
  }
  return out;
}

double rank_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  const Eigen::VectorXd ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  long n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      rank_sum_pos += ranks[static_cast<Eigen::Index>(i)];
      ++n_pos;
    }
  }
  const long n_neg = static_cast<long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::runtime_error("AUC undefined: single-class sample");
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

// Ridge-stabilized Newton fit of logistic regression on a design matrix.
Eigen::VectorXd fit_logistic(const Eigen::MatrixXd& design,
                             const std::vector<int>& labels) {
  const auto dim = design.cols();
  const double ridge = 1e-4;
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd y(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    y[i] = labels[static_cast<std::size_t>(i)];
  }
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta = design * weights;
    const Eigen::VectorXd mu =
        (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd grad =
        design.transpose() * (y - mu) - ridge * weights;
    const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
    Eigen::MatrixXd hess =
        design.transpose() * w.asDiagonal() * design +
        ridge * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::VectorXd delta = hess.llt().solve(grad);
    weights += delta;
    if (delta.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return weights;
}

// Spline expansion of a scalar feature mapped affinely onto [0, 1] by the
// training range (test points clamp to the boundary).
Eigen::MatrixXd spline_design(const Eigen::VectorXd& values, double lo,
                              double hi, const SplineBasis& basis) {
  Eigen::MatrixXd design(values.size(), basis.num_basis());
  Eigen::VectorXd phi;
  const double span = hi > lo ? hi - lo : 1.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double u = std::clamp((values[i] - lo) / span, 0.0, 1.0);
    basis.evaluate_into(u, phi);
    design.row(i) = phi.transpose();
  }
  return design;
}

}  // namespace

AucResult cross_validated_auc(const Eigen::VectorXd& feature,
                              const std::vector<int>& labels, int folds,
                              int repeats, int spline_df, std::uint64_t seed) {
  const auto n = feature.size();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("cross_validated_auc: length mismatch");
  }
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (spline_df < 2) throw std::invalid_argument("spline_df must be >= 2");

  std::vector<Eigen::Index> positives, negatives;
  for (Eigen::Index i = 0; i < n; ++i) {
    (labels[static_cast<std::size_t>(i)] == 1 ? positives : negatives)
        .push_back(i);
  }
  // Stratified folds keep both classes in every training set; that needs at
  // least two subjects per class.
  if (positives.size() < 2 || negatives.size() < 2) {
    throw std::runtime_error(
        "cross_validated_auc: need at least two subjects of each class");
  }

  const int degree = std::min(3, spline_df - 1);
  const SplineBasis basis(spline_df - degree - 1, degree);

  AucResult result;
  result.per_repeat.reserve(static_cast<std::size_t>(repeats));
  for (int rep = 0; rep < repeats; ++rep) {
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(rep)));
    auto pos = positives;
    auto neg = negatives;
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> fold_of(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < pos.size(); ++k) {
      fold_of[static_cast<std::size_t>(pos[k])] = static_cast<int>(k) % folds;
    }
    for (std::size_t k = 0; k < neg.size(); ++k) {
      fold_of[static_cast<std::size_t>(neg[k])] = static_cast<int>(k) % folds;
    }

    Eigen::VectorXd scores(n);
    for (int f = 0; f < folds; ++f) {
      std::vector<Eigen::Index> train, test;
      for (Eigen::Index i = 0; i < n; ++i) {
        (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
      }
      if (test.empty()) continue;
      Eigen::VectorXd train_x(static_cast<Eigen::Index>(train.size()));
      std::vector<int> train_y(train.size());
      for (std::size_t k = 0; k < train.size(); ++k) {
        train_x[static_cast<Eigen::Index>(k)] = feature[train[k]];
        train_y[k] = labels[static_cast<std::size_t>(train[k])];
      }
      const double lo = train_x.minCoeff();
      const double hi = train_x.maxCoeff();
      const Eigen::MatrixXd design = spline_design(train_x, lo, hi, basis);
      const Eigen::VectorXd weights = fit_logistic(design, train_y);

      Eigen::VectorXd test_x(static_cast<Eigen::Index>(test.size()));
      for (std::size_t k = 0; k < test.size(); ++k) test_x[static_cast<Eigen::Index>(k)] = feature[test[k]];
      const Eigen::VectorXd test_scores =
          spline_design(test_x, lo, hi, basis) * weights;
      for (std::size_t k = 0; k < test.size(); ++k) {
        scores[test[k]] = test_scores[static_cast<Eigen::Index>(k)];
      }
    }
    result.per_repeat.push_back(rank_auc(scores, labels));
  }

  result.mean_auc =
      std::accumulate(result.per_repeat.begin(), result.per_repeat.end(), 0.0) /
      static_cast<double>(result.per_repeat.size());
  result.ci_low = quantile(result.per_repeat, 0.025);
  result.ci_high = quantile(result.per_repeat, 0.975);
  return result;
}

EffectTrajectory effect_trajectories(const std::vector<ChainResult>& chains,
                                     const SplineBasis& basis,
                                     const Dataset& data, int child,
                                     int parent, int grid_size) {
  if (chains.empty()) throw std::invalid_argument("no chains");
  const int p = data.p();
  if (child < 0 || child >= p || parent < 0 || parent >= p) {
    throw std::invalid_argument("effect_trajectories: variable out of range");
  }
  const BackgroundKnowledge bk = BackgroundKnowledge::from_roles(data.roles);
  if (bk.forbids(child, parent)) {
    throw std::invalid_argument(
        "effect_trajectories: pair " + data.variable_names[static_cast<std::size_t>(parent)] +
        " -> " + data.variable_names[static_cast<std::size_t>(child)] +
        " is forbidden by background knowledge");
  }
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");

  EffectTrajectory traj;
  traj.child = child;
  traj.parent = parent;
  traj.grid = Eigen::VectorXd::LinSpaced(grid_size, 0.0, 1.0);

  std::vector<double> parent_col(
      data.values.col(parent).data(),
      data.values.col(parent).data() + data.n());
  traj.parent_quantiles = {quantile(parent_col, 0.05),
                           quantile(parent_col, 0.50),
                           quantile(parent_col, 0.95)};

  // Orientation alignment mirrors the pooled summary: chains whose mean
  // ordering anti-correlates with chain 0 evaluate their curves at 1 - z.
  const auto num_chains = chains.size();
  std::vector<bool> flipped(num_chains, false);
  {
    std::vector<Eigen::VectorXd> mean(num_chains);
    for (std::size_t c = 0; c < num_chains; ++c) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(chains[c].n);
      for (const auto& s : chains[c].samples) acc += s.z;
      mean[c] = acc / static_cast<double>(chains[c].samples.size());
    }
    for (std::size_t c = 1; c < num_chains; ++c) {
      const auto rho = spearman_correlation(mean[c], mean[0]);
      flipped[c] = rho && *rho < 0.0;
    }
  }

  const Eigen::MatrixXd phi = basis.evaluate_rows(traj.grid);
  std::size_t total = 0;
  for (const auto& chain : chains) total += chain.samples.size();
  if (total == 0) throw std::runtime_error("no retained samples");

  // curves[g] holds per-sample values at grid point g.
  std::vector<std::vector<double>> base_draws(
      static_cast<std::size_t>(grid_size));
  std::array<std::vector<std::vector<double>>, 3> shift_draws;
  for (auto& sd : shift_draws) sd.resize(static_cast<std::size_t>(grid_size));
  for (auto& v : base_draws) v.reserve(total);
  for (auto& sd : shift_draws) {
    for (auto& v : sd) v.reserve(total);
  }

  for (std::size_t c = 0; c < num_chains; ++c) {
    for (const auto& s : chains[c].samples) {
      const Eigen::VectorXd base_curve =
          phi * s.alpha.row(child).transpose();
      const Eigen::VectorXd effect_curve =
          phi * s.beta[static_cast<std::size_t>(child)].row(parent).transpose();
      const double gate = s.edges(child, parent) ? 1.0 : 0.0;
      for (int g = 0; g < grid_size; ++g) {
        const int gg = flipped[c] ? grid_size - 1 - g : g;
        const double base = base_curve[gg];
        base_draws[static_cast<std::size_t>(g)].push_back(base);
        for (int q = 0; q < 3; ++q) {
          shift_draws[static_cast<std::size_t>(q)][static_cast<std::size_t>(g)]
              .push_back(base + gate * effect_curve[gg] *
                                    traj.parent_quantiles[static_cast<std::size_t>(q)]);
        }
      }
    }
  }

  auto summarize = [&](const std::vector<std::vector<double>>& draws,
                       Eigen::VectorXd& mean, Eigen::VectorXd& lo,
                       Eigen::VectorXd& hi) {
    mean.resize(grid_size);
    lo.resize(grid_size);
    hi.resize(grid_size);
    for (int g = 0; g < grid_size; ++g) {
      const auto& v = draws[static_cast<std::size_t>(g)];
      mean[g] = std::accumulate(v.begin(), v.end(), 0.0) /
                static_cast<double>(v.size());
      lo[g] = quantile(v, 0.025);
      hi[g] = quantile(v, 0.975);
    }
  };
  summarize(base_draws, traj.baseline_mean, traj.baseline_lo, traj.baseline_hi);
  for (int q = 0; q < 3; ++q) {
    summarize(shift_draws[static_cast<std::size_t>(q)],
              traj.shifted_mean[static_cast<std::size_t>(q)],
              traj.shifted_lo[static_cast<std::size_t>(q)],
              traj.shifted_hi[static_cast<std::size_t>(q)]);
  }
  return traj;
}

void export_progression_panel(const PosteriorSummary& summary,
                              const Dataset& data, const std::string& path) {
  std::ostringstream out;
  std::vector<std::string> header = {"z_mean"};
  header.insert(header.end(), data.variable_names.begin(),
                data.variable_names.end());
  header.push_back("diagnosis");
  out << io::format_csv_row(header);
  out.precision(17);
  for (int i = 0; i < data.n(); ++i) {
    std::vector<std::string> cells;
    cells.reserve(header.size());
    std::ostringstream z;
    z.precision(17);
    z << summary.z_mean[i];
    cells.push_back(z.str());
    for (int j = 0; j < data.p(); ++j) {
      std::ostringstream v;
      v.precision(17);
      v << data.values(i, j);
      cells.push_back(v.str());
    }
    cells.push_back(data.has_diagnosis()
                        ? data.diagnosis[static_cast<std::size_t>(i)]
                        : "");
    out << io::format_csv_row(cells);
  }
  io::write_text_atomic(path, out.str());
}

void write_trajectory_csv(const EffectTrajectory& traj,
                          const std::string& path) {
  std::ostringstream out;
  out << "z,baseline_mean,baseline_lo,baseline_hi,"
         "p05_mean,p05_lo,p05_hi,p50_mean,p50_lo,p50_hi,"
         "p95_mean,p95_lo,p95_hi\n";
  out.precision(12);
  for (Eigen::Index g = 0; g < traj.grid.size(); ++g) {
    out << traj.grid[g] << ',' << traj.baseline_mean[g] << ','
        << traj.baseline_lo[g] << ',' << traj.baseline_hi[g];
    for (int q = 0; q < 3; ++q) {
      out << ',' << traj.shifted_mean[static_cast<std::size_t>(q)][g] << ','
          << traj.shifted_lo[static_cast<std::size_t>(q)][g] << ','
          << traj.shifted_hi[static_cast<std::size_t>(q)][g];
    }
    out << '\n';
  }
  io::write_text_atomic(path, out.str());
}

}  // namespace bnlte
