#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>

#include "bnlte/graph_eval.hpp"
#include "bnlte/rng.hpp"

using namespace bnlte;

namespace {

// Random DAG without two-cycles, for the metric property tests.
EdgeMatrix random_dag(int p, double density, Rng& rng) {
  std::vector<int> order(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  EdgeMatrix edges = EdgeMatrix::Zero(p, p);
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      if (rng.bernoulli(density)) {
        edges(order[static_cast<std::size_t>(b)],
              order[static_cast<std::size_t>(a)]) = 1;
      }
    }
  }
  return edges;
}

int shd_graphs(const EdgeMatrix& a, const EdgeMatrix& b) {
  return structural_hamming_distance(a, ConsensusGraph::from_graph(b));
}

}  // namespace

TEST_CASE("thresholding is inclusive at the cut") {
  Eigen::MatrixXd pip = Eigen::MatrixXd::Zero(3, 3);
  pip(1, 0) = 0.5;
  pip(2, 0) = 0.499999;
  pip(2, 1) = 0.9;
  const EdgeMatrix edges = threshold_graph(pip, 0.5);
  CHECK(edges(1, 0) == 1);
  CHECK(edges(2, 0) == 0);
  CHECK(edges(2, 1) == 1);
  CHECK(threshold_graph(Eigen::MatrixXd::Zero(4, 4)).sum() == 0);
  CHECK_THROWS_AS(threshold_graph(pip, 1.5), std::invalid_argument);
}

TEST_CASE("thresholding the reported PIP column keeps four of five edges") {
  // Edges in file order: PTAU->GFAP 0.80, AB42->AB40 0.75, PTAU->NFL 0.57,
  // NFL->HIPPOCAMPUS 0.53, AB42->NFL 0.46.
  const std::vector<double> pips = {0.80, 0.75, 0.57, 0.53, 0.46};
  Eigen::MatrixXd pip = Eigen::MatrixXd::Zero(6, 6);
  for (int k = 0; k < 5; ++k) pip(k + 1, 0) = pips[static_cast<std::size_t>(k)];
  const EdgeMatrix edges = threshold_graph(pip, 0.5);
  CHECK(edges(1, 0) == 1);
  CHECK(edges(2, 0) == 1);
  CHECK(edges(3, 0) == 1);
  CHECK(edges(4, 0) == 1);
  CHECK(edges(5, 0) == 0);
}

TEST_CASE("presence metrics on the worked four-node example") {
  // est {A-B, B-C}, ref present {A-B, C-D}, excluded {B-C}.
  EdgeMatrix est = EdgeMatrix::Zero(4, 4);
  est(1, 0) = 1;  // A -> B
  est(2, 1) = 1;  // B -> C
  ConsensusGraph ref = ConsensusGraph::from_graph(EdgeMatrix::Zero(4, 4));
  ref.status(1, 0) = static_cast<int>(EdgeStatus::Present);
  ref.status(3, 2) = static_cast<int>(EdgeStatus::Present);
  ref.status(2, 1) = static_cast<int>(EdgeStatus::Excluded);

  const auto pr = presence_precision_recall(est, ref);
  REQUIRE(pr.precision.has_value());
  REQUIRE(pr.recall.has_value());
  CHECK(*pr.precision == doctest::Approx(1.0));
  CHECK(*pr.recall == doctest::Approx(0.5));
}

TEST_CASE("presence agreement and degenerate cases") {
  Rng rng(1);
  const EdgeMatrix g = random_dag(5, 0.4, rng);
  const ConsensusGraph ref = ConsensusGraph::from_graph(g);
  const auto exact = presence_precision_recall(g, ref);
  CHECK(*exact.precision == doctest::Approx(1.0));
  CHECK(*exact.recall == doctest::Approx(1.0));

  const EdgeMatrix empty = EdgeMatrix::Zero(5, 5);
  const auto none = presence_precision_recall(empty, ref);
  CHECK_FALSE(none.precision.has_value());
  if (g.sum() > 0) CHECK(*none.recall == doctest::Approx(0.0));
}

TEST_CASE("orientation metrics") {
  SUBCASE("exact direction match") {
    EdgeMatrix est = EdgeMatrix::Zero(2, 2);
    est(1, 0) = 1;
    ConsensusGraph ref = ConsensusGraph::from_graph(est);
    const auto pr = orientation_precision_recall(est, ref);
    CHECK(*pr.precision == doctest::Approx(1.0));
    CHECK(*pr.recall == doctest::Approx(1.0));
  }

  SUBCASE("a reversed single edge scores zero") {
    EdgeMatrix est = EdgeMatrix::Zero(2, 2);
    est(1, 0) = 1;
    EdgeMatrix truth = EdgeMatrix::Zero(2, 2);
    truth(0, 1) = 1;
    const auto pr =
        orientation_precision_recall(est, ConsensusGraph::from_graph(truth));
    CHECK(*pr.precision == doctest::Approx(0.0));
    CHECK(*pr.recall == doctest::Approx(0.0));
  }

  SUBCASE("two of three shared pairs oriented correctly") {
    EdgeMatrix est = EdgeMatrix::Zero(4, 4);
    est(1, 0) = 1;
    est(2, 1) = 1;
    est(2, 3) = 1;  // reversed relative to the reference
    EdgeMatrix truth = EdgeMatrix::Zero(4, 4);
    truth(1, 0) = 1;
    truth(2, 1) = 1;
    truth(3, 2) = 1;
    const auto pr =
        orientation_precision_recall(est, ConsensusGraph::from_graph(truth));
    CHECK(*pr.precision == doctest::Approx(2.0 / 3.0));
    CHECK(*pr.recall == doctest::Approx(2.0 / 3.0));
  }

  SUBCASE("a pair the reference marks in both directions accepts either") {
    EdgeMatrix est = EdgeMatrix::Zero(2, 2);
    est(1, 0) = 1;
    EdgeMatrix both = EdgeMatrix::Zero(2, 2);
    both(1, 0) = 1;
    both(0, 1) = 1;
    const auto pr =
        orientation_precision_recall(est, ConsensusGraph::from_graph(both));
    CHECK(*pr.precision == doctest::Approx(1.0));
    CHECK(*pr.recall == doctest::Approx(0.5));
  }
}

TEST_CASE("structural Hamming distance basics") {
  Rng rng(2);
  const EdgeMatrix g = random_dag(6, 0.3, rng);
  CHECK(shd_graphs(g, g) == 0);

  EdgeMatrix reversed = g;
  bool flipped_one = false;
  for (int j = 0; j < 6 && !flipped_one; ++j) {
    for (int l = 0; l < 6 && !flipped_one; ++l) {
      if (g(j, l)) {
        reversed(j, l) = 0;
        reversed(l, j) = 1;
        flipped_one = true;
      }
    }
  }
  REQUIRE(flipped_one);
  CHECK(shd_graphs(reversed, g) == 1);
}

TEST_CASE("SHD identities over random graph triples") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const EdgeMatrix a = random_dag(8, 0.3, rng);
    const EdgeMatrix b = random_dag(8, 0.3, rng);
    const EdgeMatrix c = random_dag(8, 0.3, rng);
    CHECK(shd_graphs(a, a) == 0);
    CHECK(shd_graphs(a, b) == shd_graphs(b, a));
    CHECK(shd_graphs(a, c) <= shd_graphs(a, b) + shd_graphs(b, c));
  }
}

TEST_CASE("presence metrics ignore estimated edge orientation") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const EdgeMatrix truth = random_dag(6, 0.35, rng);
    const EdgeMatrix est = random_dag(6, 0.35, rng);
    EdgeMatrix reversed = EdgeMatrix::Zero(6, 6);
    for (int j = 0; j < 6; ++j) {
      for (int l = 0; l < 6; ++l) {
        if (est(j, l)) reversed(l, j) = 1;
      }
    }
    const ConsensusGraph ref = ConsensusGraph::from_graph(truth);
    const auto a = presence_precision_recall(est, ref);
    const auto b = presence_precision_recall(reversed, ref);
    CHECK(a.precision == b.precision);
    CHECK(a.recall == b.recall);
  }
}

TEST_CASE("excluded pairs never touch any metric") {
  Rng rng(5);
  const int p = 8;
  const EdgeMatrix truth = random_dag(p, 0.3, rng);
  ConsensusGraph ref = ConsensusGraph::from_graph(truth);
  // Exclude a handful of non-adjacent pairs outright.
  std::vector<std::pair<int, int>> excluded_pairs;
  for (int u = 0; u < p && excluded_pairs.size() < 5; ++u) {
    for (int v = u + 1; v < p && excluded_pairs.size() < 5; ++v) {
      if (!truth(v, u) && !truth(u, v)) {
        ref.status(v, u) = static_cast<int>(EdgeStatus::Excluded);
        ref.status(u, v) = static_cast<int>(EdgeStatus::Excluded);
        excluded_pairs.emplace_back(u, v);
      }
    }
  }
  REQUIRE(excluded_pairs.size() == 5);

  const EdgeMatrix est = random_dag(p, 0.3, rng);
  const auto base_pr = presence_precision_recall(est, ref);
  const auto base_or = orientation_precision_recall(est, ref);
  const int base_shd = structural_hamming_distance(est, ref);

  for (int mask = 0; mask < 8; ++mask) {
    EdgeMatrix perturbed = est;
    for (std::size_t k = 0; k < excluded_pairs.size(); ++k) {
      const auto [u, v] = excluded_pairs[k];
      perturbed(v, u) = (mask >> (k % 3)) & 1;
      perturbed(u, v) = (mask >> ((k + 1) % 3)) & 1;
    }
    CHECK(presence_precision_recall(perturbed, ref).precision ==
          base_pr.precision);
    CHECK(presence_precision_recall(perturbed, ref).recall == base_pr.recall);
    CHECK(orientation_precision_recall(perturbed, ref).precision ==
          base_or.precision);
    CHECK(orientation_precision_recall(perturbed, ref).recall ==
          base_or.recall);
    CHECK(structural_hamming_distance(perturbed, ref) == base_shd);
  }
}

TEST_CASE("built-in consensus graph structure") {
  const ConsensusGraph ref = ad_consensus();
  REQUIRE(ref.p() == 16);
  REQUIRE(ref.names == ad_variable_names());

  int present_cells = 0;
  int present_pairs = 0;
  int excluded_pairs = 0;
  for (int u = 0; u < 16; ++u) {
    for (int v = u + 1; v < 16; ++v) {
      const bool fwd = ref.at(v, u) == EdgeStatus::Present;
      const bool bwd = ref.at(u, v) == EdgeStatus::Present;
      if (fwd) ++present_cells;
      if (bwd) ++present_cells;
      if (fwd || bwd) {
        ++present_pairs;
      } else if (ref.at(v, u) == EdgeStatus::Excluded ||
                 ref.at(u, v) == EdgeStatus::Excluded) {
        ++excluded_pairs;
      }
    }
  }
  // Counts derived by hand from the reference edge list.
  CHECK(present_cells == 55);
  CHECK(present_pairs == 52);
  CHECK(excluded_pairs == 17);

  // The two-way pairs among the plasma markers.
  const int ab40 = 8, ab42 = 9, ptau = 10;
  CHECK(ref.at(ab40, ab42) == EdgeStatus::Present);
  CHECK(ref.at(ab42, ab40) == EdgeStatus::Present);
  CHECK(ref.at(ab42, ptau) == EdgeStatus::Present);
  CHECK(ref.at(ptau, ab42) == EdgeStatus::Present);
  CHECK(ref.at(ab40, ptau) == EdgeStatus::Present);
  CHECK(ref.at(ptau, ab40) == EdgeStatus::Present);

  // An empty estimate misses exactly the present pairs.
  const EdgeMatrix empty = EdgeMatrix::Zero(16, 16);
  CHECK(structural_hamming_distance(empty, ref) == 52);
}

TEST_CASE("consensus CSV round trip preserves every cell") {
  const ConsensusGraph ref = ad_consensus();
  write_consensus_csv(ref, "consensus_roundtrip.csv");
  const ConsensusGraph loaded = load_consensus_csv("consensus_roundtrip.csv");
  CHECK(loaded.names == ref.names);
  CHECK((loaded.status - ref.status).cwiseAbs().maxCoeff() == 0);
  std::remove("consensus_roundtrip.csv");
}

TEST_CASE("subset metrics restrict to unconstrained variables") {
  const ConsensusGraph ref = ad_consensus();
  BackgroundKnowledge bk;
  bk.root_nodes = {0, 1, 2, 3};
  bk.sink_nodes = {13, 14, 15};

  SUBCASE("empty background knowledge reproduces the full metrics") {
    Rng rng(6);
    const EdgeMatrix est = random_dag(16, 0.2, rng);
    BackgroundKnowledge none;
    const GraphMetrics sub = subset_metrics(est, ref, none);
    const auto full = presence_precision_recall(est, ref);
    CHECK(sub.subset_presence.precision == full.precision);
    CHECK(sub.subset_presence.recall == full.recall);
    CHECK(*sub.subset_shd == structural_hamming_distance(est, ref));
  }

  SUBCASE("the AD roles leave the nine biomarker/volumetric variables") {
    EdgeMatrix est = EdgeMatrix::Zero(16, 16);
    est(11, 10) = 1;  // PTAU217 -> NFL, inside the subset
    const GraphMetrics sub = subset_metrics(est, ref, bk);
    // Subset has 9 variables; the estimate has 1 present pair there.
    CHECK(sub.subset_presence.precision.has_value());
    CHECK(*sub.subset_presence.precision == doctest::Approx(1.0));
  }

  SUBCASE("all-but-none excluded is an error") {
    BackgroundKnowledge everything;
    for (int i = 0; i < 8; ++i) everything.root_nodes.insert(i);
    for (int i = 8; i < 16; ++i) everything.sink_nodes.insert(i);
    EdgeMatrix est = EdgeMatrix::Zero(16, 16);
    CHECK_THROWS_AS(subset_metrics(est, ref, everything), std::runtime_error);
  }
}

TEST_CASE("comparison matrices") {
  EdgeMatrix a = EdgeMatrix::Zero(3, 3);
  a(1, 0) = 1;
  EdgeMatrix b = a;

  SUBCASE("identical graphs give a zero difference mask") {
    const ComparisonMatrices cm = comparison_matrix({a, b});
    REQUIRE(cm.differences.size() == 1);
    CHECK(cm.differences[0].cwiseAbs().maxCoeff() == 0);
  }

  SUBCASE("one differing edge gives exactly one nonzero cell") {
    b(2, 0) = 1;
    const ComparisonMatrices cm = comparison_matrix({a, b});
    CHECK(cm.differences[0].cwiseAbs().sum() == 1);
  }

  SUBCASE("three settings give three diagonal and three lower blocks") {
    EdgeMatrix c = EdgeMatrix::Zero(3, 3);
    const ComparisonMatrices cm = comparison_matrix({a, b, c},
                                                    {"none", "rn", "rn+sn"});
    CHECK(cm.adjacency.size() == 3);
    CHECK(cm.differences.size() == 3);
    CHECK(cm.pair_index.size() == 3);
  }

  SUBCASE("dimension mismatch is rejected") {
    EdgeMatrix small = EdgeMatrix::Zero(2, 2);
    CHECK_THROWS_AS(comparison_matrix({a, small}), std::invalid_argument);
    CHECK_THROWS_AS(comparison_matrix({a}), std::invalid_argument);
  }
}
