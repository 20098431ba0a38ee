#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "bnlte/io.hpp"
#include "bnlte/progression.hpp"
#include "bnlte/stats.hpp"
#include "bnlte/synth.hpp"
#include "test_support.hpp"

using namespace bnlte;

TEST_CASE("pseudotime alignment") {
  Eigen::VectorXd reference(6);
  reference << 0.1, 0.9, 0.4, 0.2, 0.7, 0.55;

  SUBCASE("identity stays put") {
    const AlignResult r = align_pseudotime(reference, reference);
    CHECK_FALSE(r.flipped);
    CHECK(*r.spearman == doctest::Approx(1.0));
    CHECK((r.aligned - reference).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("a reversed candidate is flipped back") {
    const Eigen::VectorXd candidate = (1.0 - reference.array()).matrix();
    const AlignResult r = align_pseudotime(candidate, reference);
    CHECK(r.flipped);
    CHECK(*r.spearman == doctest::Approx(1.0));
    CHECK((r.aligned - reference).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("nonlinear monotone maps keep full rank correlation") {
    const Eigen::VectorXd squared = reference.array().square().matrix();
    const AlignResult r = align_pseudotime(squared, reference);
    CHECK(*r.spearman == doctest::Approx(1.0));
    CHECK_FALSE(r.flipped);
  }

  SUBCASE("constant candidate is undefined") {
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(6, 0.5);
    const AlignResult r = align_pseudotime(flat, reference);
    CHECK_FALSE(r.spearman.has_value());
  }

  SUBCASE("alignment output never anticorrelates with the reference") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd candidate(20), ref(20);
      for (int i = 0; i < 20; ++i) {
        candidate[i] = rng.uniform();
        ref[i] = rng.uniform();
      }
      const AlignResult r = align_pseudotime(candidate, ref);
      if (r.spearman) {
        const auto rho = spearman_correlation(r.aligned, ref);
        CHECK(*rho >= 0.0);
      }
    }
  }
}

TEST_CASE("rank AUC is exactly invariant under monotone score maps") {
  Rng rng(7);
  Eigen::VectorXd scores(200);
  std::vector<int> labels(200);
  for (int i = 0; i < 200; ++i) {
    scores[i] = rng.normal();
    labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.4) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  const double base = rank_auc(scores, labels);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = 0.5 + rng.uniform();
    const double b = rng.normal();
    Eigen::VectorXd mapped(200);
    for (int i = 0; i < 200; ++i) {
      mapped[i] = std::exp(a * scores[i]) + b + std::atan(scores[i]);
    }
    CHECK(rank_auc(mapped, labels) == doctest::Approx(base).epsilon(1e-14));
  }
}

TEST_CASE("cross-validated AUC") {
  SUBCASE("perfect separation scores one") {
    Eigen::VectorXd feature(100);
    std::vector<int> labels(100);
    for (int i = 0; i < 100; ++i) {
      feature[i] = i < 50 ? -2.0 - 0.01 * i : 2.0 + 0.01 * i;
      labels[static_cast<std::size_t>(i)] = i < 50 ? 0 : 1;
    }
    const AucResult r = cross_validated_auc(feature, labels, 5, 5, 4, 3);
    CHECK(r.mean_auc == doctest::Approx(1.0));
  }

  SUBCASE("a label-independent feature sits at chance") {
    Rng rng(11);
    Eigen::VectorXd feature(400);
    std::vector<int> labels(400);
    for (int i = 0; i < 400; ++i) {
      feature[i] = rng.normal();
      labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    }
    const AucResult r = cross_validated_auc(feature, labels, 5, 20, 4, 4);
    CHECK(r.mean_auc > 0.45);
    CHECK(r.mean_auc < 0.55);
    CHECK(r.ci_low <= r.mean_auc);
    CHECK(r.ci_high >= r.mean_auc);
  }

  SUBCASE("monotone feature maps barely move the cross-validated value") {
    Rng rng(13);
    Eigen::VectorXd feature(300);
    std::vector<int> labels(300);
    for (int i = 0; i < 300; ++i) {
      feature[i] = rng.normal();
      labels[static_cast<std::size_t>(i)] =
          rng.bernoulli(1.0 / (1.0 + std::exp(-1.5 * feature[i]))) ? 1 : 0;
    }
    const AucResult base = cross_validated_auc(feature, labels, 5, 10, 4, 5);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd mapped = feature;
      for (int i = 0; i < 300; ++i) {
        mapped[i] = std::tanh(feature[i]) + 0.2 * feature[i];
      }
      const AucResult moved = cross_validated_auc(mapped, labels, 5, 10, 4, 5);
      CHECK(std::fabs(moved.mean_auc - base.mean_auc) < 0.03);
    }
  }

  SUBCASE("a class with fewer than two subjects is an error") {
    Eigen::VectorXd feature(10);
    std::vector<int> labels(10, 0);
    labels[3] = 1;
    for (int i = 0; i < 10; ++i) feature[i] = i;
    CHECK_THROWS_AS(cross_validated_auc(feature, labels, 5, 3, 4, 1),
                    std::runtime_error);
  }
}

namespace {

// Hand-built single-chain posteriors for trajectory tests.
std::vector<ChainResult> fixed_chain(int n, int p, int b,
                                     const Eigen::MatrixXd& alpha,
                                     const Eigen::MatrixXd& beta_child,
                                     int child, int edge_on) {
  ChainResult chain;
  chain.n = n;
  chain.p = p;
  chain.num_basis = b;
  for (int s = 0; s < 8; ++s) {
    ParameterSample sample;
    sample.z = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    sample.alpha = alpha;
    sample.beta.assign(static_cast<std::size_t>(p),
                       Eigen::MatrixXd::Zero(p, b));
    sample.beta[static_cast<std::size_t>(child)] = beta_child;
    sample.edges = EdgeMatrix::Zero(p, p);
    if (edge_on >= 0) sample.edges(child, edge_on) = 1;
    sample.sigma2 = Eigen::VectorXd::Ones(p);
    chain.samples.push_back(std::move(sample));
  }
  return {chain};
}

}  // namespace

TEST_CASE("effect trajectories") {
  const SplineBasis basis(2, 3);
  const int b = basis.num_basis();
  const int n = 101;
  const int p = 3;

  Dataset data;
  data.values.resize(n, p);
  // Symmetric parent column: its median is zero, so the median-shift curve
  // coincides with the baseline.
  data.values.col(0) = Eigen::VectorXd::LinSpaced(n, -2.0, 2.0);
  data.values.col(1) = Eigen::VectorXd::LinSpaced(n, -1.0, 1.0);
  data.values.col(2) = Eigen::VectorXd::LinSpaced(n, -1.5, 1.5);
  data.variable_names = {"P", "C", "D"};
  data.roles = {Role::Free, Role::Free, Role::Free};
  for (int j = 0; j < p; ++j) data.standardization.emplace_back(0.0, 1.0);

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(p, b);
  alpha.row(1) = Eigen::RowVectorXd::LinSpaced(b, -1.0, 1.0);

  SUBCASE("median of a symmetric parent leaves the baseline unchanged") {
    Eigen::MatrixXd beta_child = Eigen::MatrixXd::Zero(p, b);
    beta_child.row(0).setConstant(1.0);
    const auto chains = fixed_chain(n, p, b, alpha, beta_child, 1, 0);
    const EffectTrajectory traj =
        effect_trajectories(chains, basis, data, 1, 0, 50);
    CHECK(std::fabs(traj.parent_quantiles[1]) < 1e-12);
    CHECK((traj.shifted_mean[1] - traj.baseline_mean).cwiseAbs().maxCoeff() <
          1e-12);
  }

  SUBCASE("an edge with zero inclusion leaves every curve at the baseline") {
    Eigen::MatrixXd beta_child = Eigen::MatrixXd::Zero(p, b);
    beta_child.row(0).setConstant(5.0);
    const auto chains = fixed_chain(n, p, b, alpha, beta_child, 1, -1);
    const EffectTrajectory traj =
        effect_trajectories(chains, basis, data, 1, 0, 40);
    for (int q = 0; q < 3; ++q) {
      CHECK((traj.shifted_mean[static_cast<std::size_t>(q)] -
             traj.baseline_mean)
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }

  SUBCASE("a constant unit effect shifts curves by the quantile gap") {
    Eigen::MatrixXd beta_child = Eigen::MatrixXd::Zero(p, b);
    beta_child.row(0).setConstant(1.0);
    const auto chains = fixed_chain(n, p, b, alpha, beta_child, 1, 0);
    const EffectTrajectory traj =
        effect_trajectories(chains, basis, data, 1, 0, 60);
    const double gap = traj.parent_quantiles[2] - traj.parent_quantiles[0];
    const Eigen::VectorXd offset =
        traj.shifted_mean[2] - traj.shifted_mean[0];
    for (Eigen::Index g = 0; g < offset.size(); ++g) {
      CHECK(offset[g] == doctest::Approx(gap).epsilon(1e-12));
    }
  }

  SUBCASE("background-forbidden pairs are rejected by name") {
    Dataset constrained = data;
    constrained.roles = {Role::Sink, Role::Free, Role::Free};
    Eigen::MatrixXd beta_child = Eigen::MatrixXd::Zero(p, b);
    const auto chains = fixed_chain(n, p, b, alpha, beta_child, 1, -1);
    CHECK_THROWS_WITH_AS(
        effect_trajectories(chains, basis, constrained, 1, 0, 30),
        doctest::Contains("forbidden"), std::invalid_argument);
  }
}

TEST_CASE("progression panel export") {
  const GroundTruthSpec spec = generate_spec(5, 0.3, 1.0, 91);
  auto [data, true_z] = simulate_dataset(spec, 120, 92);

  PosteriorSummary summary;
  summary.z_mean = true_z;  // stand-in for a fitted posterior mean
  summary.z_sd = Eigen::VectorXd::Constant(120, 0.05);

  export_progression_panel(summary, data, "panel_test.csv");
  const auto table = io::read_csv("panel_test.csv");
  CHECK(table.header.size() == static_cast<std::size_t>(data.p() + 2));
  CHECK(table.rows.size() == 120);

  // Sorted by pseudotime, the class sequence is the CN -> MCI -> AD
  // gradient: mean rank ordering must follow.
  std::vector<std::pair<double, std::string>> rows;
  for (int i = 0; i < 120; ++i) {
    rows.emplace_back(true_z[i], data.diagnosis[static_cast<std::size_t>(i)]);
  }
  std::sort(rows.begin(), rows.end());
  double rank_cn = 0, rank_mci = 0, rank_ad = 0;
  int n_cn = 0, n_mci = 0, n_ad = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].second == "CN") { rank_cn += static_cast<double>(r); ++n_cn; }
    else if (rows[r].second == "MCI") { rank_mci += static_cast<double>(r); ++n_mci; }
    else { rank_ad += static_cast<double>(r); ++n_ad; }
  }
  REQUIRE(n_cn > 0);
  REQUIRE(n_mci > 0);
  REQUIRE(n_ad > 0);
  CHECK(rank_cn / n_cn < rank_mci / n_mci);
  CHECK(rank_mci / n_mci < rank_ad / n_ad);

  export_progression_panel(summary, data, "panel_test2.csv");
  CHECK(io::read_text("panel_test.csv") == io::read_text("panel_test2.csv"));
  std::remove("panel_test.csv");
  std::remove("panel_test2.csv");
}

// End-to-end curve recovery: fit a small synthetic cohort and require the
// posterior band to cover the true baseline at most grid points.
TEST_CASE("posterior baseline bands cover the truth on synthetic data") {
  GroundTruthSpec spec = generate_spec(4, 0.25, 1.0, 101);
  spec.noise_sd.setConstant(0.35);
  auto [data, true_z] = simulate_dataset(spec, 250, 102);

  SamplerConfig config;
  config.num_chains = 2;
  config.num_iterations = 1200;
  config.burn_in = 400;
  config.seed = 1000;
  const BackgroundKnowledge bk;
  const MultiChainResult fit = run_chains(config, data, bk);

  // Establish orientation against the truth.
  const AlignResult alignment = align_pseudotime(fit.summary.z_mean, true_z);
  REQUIRE(alignment.spearman.has_value());

  const SplineBasis basis(config.num_interior_knots, config.spline_degree);
  const SplineBasis truth_basis = spec.basis();
  const ModelParameters truth =
      truth_as_model_parameters(spec, basis, data, true_z);

  int covered = 0, total = 0;
  const int grid = 41;
  for (int j = 0; j < 4; ++j) {
    const EffectTrajectory traj =
        effect_trajectories(fit.chains, basis, data, j,
                            j == 0 ? 1 : 0, grid);
    for (int g = 0; g < grid; ++g) {
      const double z = alignment.flipped
                           ? 1.0 - traj.grid[g]
                           : traj.grid[g];
      Eigen::VectorXd phi = basis.evaluate(z);
      const double truth_value = truth.alpha.row(j).dot(phi);
      ++total;
      if (truth_value >= traj.baseline_lo[g] - 1e-9 &&
          truth_value <= traj.baseline_hi[g] + 1e-9) {
        ++covered;
      }
    }
  }
  CHECK(static_cast<double>(covered) / static_cast<double>(total) >= 0.8);
}
