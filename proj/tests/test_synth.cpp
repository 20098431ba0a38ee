#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>

#include "bnlte/model.hpp"
#include "bnlte/stats.hpp"
#include "bnlte/synth.hpp"

using namespace bnlte;

namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

}  // namespace

TEST_CASE("spec generation basics") {
  SUBCASE("zero density gives an empty graph") {
    const GroundTruthSpec spec = generate_spec(6, 0.0, 1.0, 3);
    CHECK(spec.true_edges.sum() == 0);
  }

  SUBCASE("full varying fraction makes every edge curve move") {
    const GroundTruthSpec spec = generate_spec(8, 0.3, 1.0, 5);
    const SplineBasis basis = spec.basis();
    REQUIRE(spec.true_edges.sum() > 0);
    for (int j = 0; j < spec.p; ++j) {
      for (int l = 0; l < spec.p; ++l) {
        if (!spec.true_edges(j, l)) continue;
        CHECK(spec.edge_curves[static_cast<std::size_t>(j)]
                              [static_cast<std::size_t>(l)]
                  .range(basis) > 0.1);
      }
    }
  }

  SUBCASE("generation is deterministic in the seed") {
    const GroundTruthSpec a = generate_spec(8, 0.25, 0.5, 42);
    const GroundTruthSpec b = generate_spec(8, 0.25, 0.5, 42);
    CHECK(a.true_edges == b.true_edges);
    CHECK(a.noise_sd == b.noise_sd);
    for (int j = 0; j < 8; ++j) {
      CHECK(a.baseline_curves[static_cast<std::size_t>(j)].value_start ==
            b.baseline_curves[static_cast<std::size_t>(j)].value_start);
    }
  }

  SUBCASE("requested edge count comes out at the density") {
    const GroundTruthSpec spec = generate_spec(8, 8.0 / 28.0, 1.0, 11);
    CHECK(spec.true_edges.sum() == 8);
    CHECK(is_acyclic(spec.true_edges));
  }

  SUBCASE("roles constrain the truth graph") {
    const GroundTruthSpec spec = generate_spec(8, 0.5, 1.0, 13, 2, 2);
    for (int l = 0; l < 8; ++l) {
      CHECK(spec.true_edges(0, l) == 0);
      CHECK(spec.true_edges(1, l) == 0);
    }
    for (int j = 0; j < 8; ++j) {
      CHECK(spec.true_edges(j, 6) == 0);
      CHECK(spec.true_edges(j, 7) == 0);
    }
  }
}

TEST_CASE("simulated datasets") {
  SUBCASE("standardized, labelled, deterministic") {
    const GroundTruthSpec spec = generate_spec(6, 0.3, 1.0, 21);
    auto [data, z] = simulate_dataset(spec, 200, 77);
    CHECK(data.n() == 200);
    CHECK(data.p() == 6);
    CHECK(data.has_diagnosis());
    CHECK(data.has_age());
    for (int j = 0; j < 6; ++j) {
      CHECK(std::abs(data.values.col(j).mean()) < 1e-9);
    }
    auto [data2, z2] = simulate_dataset(spec, 200, 77);
    CHECK((data.values - data2.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((z - z2).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("diagnosis is a deterministic function of true z") {
    const GroundTruthSpec spec = generate_spec(4, 0.3, 1.0, 22);
    auto [data, z] = simulate_dataset(spec, 500, 5);
    for (int i = 0; i < 500; ++i) {
      std::size_t expected = 0;
      for (double cut : spec.diagnosis_thresholds) {
        if (z[i] >= cut) ++expected;
      }
      CHECK(data.diagnosis[static_cast<std::size_t>(i)] ==
            spec.diagnosis_labels[expected]);
    }
  }

  SUBCASE("age correlates weakly with z by construction") {
    const GroundTruthSpec spec = generate_spec(4, 0.2, 1.0, 23);
    auto [data, z] = simulate_dataset(spec, 4000, 9);
    const auto rho = spearman_correlation(data.age, z);
    REQUIRE(rho.has_value());
    CHECK(*rho > 0.08);
    CHECK(*rho < 0.35);
  }

  SUBCASE("constant flat model leaves variables independent of z") {
    GroundTruthSpec spec = generate_spec(4, 0.0, 0.0, 24);
    for (auto& curve : spec.baseline_curves) {
      curve = CurveSpec{};  // constant zero
    }
    auto [data, z] = simulate_dataset(spec, 6000, 10);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(pearson(data.values.col(j), z)) < 0.05);
    }
  }

  SUBCASE("a decreasing baseline anticorrelates with z") {
    GroundTruthSpec spec = generate_spec(4, 0.0, 0.0, 25);
    CurveSpec down;
    down.kind = CurveSpec::Kind::LinearRamp;
    down.value_start = 1.0;
    down.value_end = -1.0;
    spec.baseline_curves[1] = down;
    spec.noise_sd.setConstant(0.3);
    auto [data, z] = simulate_dataset(spec, 2000, 11);
    CHECK(pearson(data.values.col(1), z) < -0.5);
  }
}

TEST_CASE("relabelling variables preserves the joint distribution") {
  // Same structure expressed under a permuted variable order must match in
  // first and second moments.
  const GroundTruthSpec spec = generate_spec(5, 0.4, 1.0, 31);
  const std::vector<int> perm = {3, 0, 4, 1, 2};

  GroundTruthSpec permuted = spec;
  permuted.true_edges = EdgeMatrix::Zero(5, 5);
  for (int j = 0; j < 5; ++j) {
    permuted.names[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])] =
        spec.names[static_cast<std::size_t>(j)];
    permuted.roles[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])] =
        spec.roles[static_cast<std::size_t>(j)];
    permuted.baseline_curves[static_cast<std::size_t>(
        perm[static_cast<std::size_t>(j)])] =
        spec.baseline_curves[static_cast<std::size_t>(j)];
    permuted.noise_sd[perm[static_cast<std::size_t>(j)]] = spec.noise_sd[j];
    for (int l = 0; l < 5; ++l) {
      if (!spec.true_edges(j, l)) continue;
      permuted.true_edges(perm[static_cast<std::size_t>(j)],
                          perm[static_cast<std::size_t>(l)]) = 1;
      permuted.edge_curves[static_cast<std::size_t>(
          perm[static_cast<std::size_t>(j)])][static_cast<std::size_t>(
          perm[static_cast<std::size_t>(l)])] =
          spec.edge_curves[static_cast<std::size_t>(j)]
                          [static_cast<std::size_t>(l)];
    }
  }

  const int n = 40000;
  auto [a, za] = simulate_dataset(spec, n, 51);
  auto [b, zb] = simulate_dataset(permuted, n, 52);
  for (int j = 0; j < 5; ++j) {
    const auto col_a = a.values.col(j);
    const auto col_b = b.values.col(perm[static_cast<std::size_t>(j)]);
    // Standardization forces matching first/second moments; compare the
    // z-correlation structure instead (distribution-level invariant).
    CHECK(pearson(col_a, za) ==
          doctest::Approx(pearson(col_b, zb)).epsilon(0.05));
    for (int l = j + 1; l < 5; ++l) {
      CHECK(pearson(col_a, a.values.col(l)) ==
            doctest::Approx(pearson(col_b,
                                    b.values.col(perm[static_cast<std::size_t>(l)])))
                .epsilon(0.05));
    }
  }
}

TEST_CASE("ground truth reproduces itself through the model parameterization") {
  GroundTruthSpec spec = generate_spec(5, 0.35, 1.0, 41);
  // Keep curve kinds inside the basis span so the projection is exact.
  for (int j = 0; j < 5; ++j) {
    for (int l = 0; l < 5; ++l) {
      auto& curve =
          spec.edge_curves[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
      if (curve.kind == CurveSpec::Kind::Plateau) {
        curve.kind = CurveSpec::Kind::LinearRamp;
      }
    }
    auto& base = spec.baseline_curves[static_cast<std::size_t>(j)];
    if (base.kind == CurveSpec::Kind::Plateau) {
      base.kind = CurveSpec::Kind::LinearRamp;
    }
  }
  spec.noise_sd.setConstant(1e-8);

  auto [data, z] = simulate_dataset(spec, 300, 61);
  const SplineBasis basis(spec.spline_interior_knots, 3);
  const ModelParameters truth =
      truth_as_model_parameters(spec, basis, data, z);
  const BackgroundKnowledge bk = BackgroundKnowledge::from_roles(data.roles);
  CHECK(reconstruction_mse(truth, basis, data, bk) < 1e-10);
}

TEST_CASE("spec JSON round trip") {
  const GroundTruthSpec spec = generate_spec(6, 0.3, 0.7, 71, 1, 1);
  write_spec_json(spec, "spec_roundtrip.json");
  const GroundTruthSpec loaded = load_spec_json("spec_roundtrip.json");
  CHECK(loaded.p == spec.p);
  CHECK(loaded.true_edges == spec.true_edges);
  CHECK(loaded.names == spec.names);
  CHECK((loaded.noise_sd - spec.noise_sd).cwiseAbs().maxCoeff() == 0.0);
  auto [a, za] = simulate_dataset(spec, 50, 3);
  auto [b, zb] = simulate_dataset(loaded, 50, 3);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  std::remove("spec_roundtrip.json");
}

TEST_CASE("the cohort preset matches the published schema") {
  const GroundTruthSpec spec = ad_like_spec(1);
  CHECK(spec.p == 16);
  CHECK(spec.names[5] == "HIPPOCAMPUS");
  CHECK(is_acyclic(spec.true_edges));
  CHECK(spec.roles[0] == Role::Root);
  CHECK(spec.roles[15] == Role::Sink);

  auto [data, z] = simulate_dataset(spec, 380, 7);
  CHECK(data.n() == 380);
  // Class proportions near 215 / 117 / 48.
  int cn = 0, mci = 0, ad = 0;
  for (const auto& label : data.diagnosis) {
    if (label == "CN") ++cn;
    else if (label == "MCI") ++mci;
    else ++ad;
  }
  CHECK(cn > 170);
  CHECK(mci > 80);
  CHECK(ad > 20);
  CHECK(cn + mci + ad == 380);
}
