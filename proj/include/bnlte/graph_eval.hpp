#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bnlte/graph.hpp"

namespace bnlte {

enum class EdgeStatus : int { Absent = 0, Present = 1, Excluded = 2 };

// Tri-state directed reference graph. status(j, l) describes the edge
// l -> j; cells marked Excluded carry no evidence either way and are
// dropped from every metric. The diagonal is always Excluded.
struct ConsensusGraph {
  std::vector<std::string> names;
  Eigen::MatrixXi status;  // entries are EdgeStatus values

  int p() const { return static_cast<int>(status.rows()); }
  EdgeStatus at(int child, int parent) const {
    return static_cast<EdgeStatus>(status(child, parent));
  }

  // Wraps a plain directed graph: edges present/absent, diagonal excluded.
  static ConsensusGraph from_graph(const EdgeMatrix& edges,
                                   std::vector<std::string> names = {});
};

// The literature-derived reference graph over the 16 Alzheimer's variables,
// including the edges left out for lack of causal consensus.
ConsensusGraph ad_consensus();
const std::vector<std::string>& ad_variable_names();
std::vector<Role> ad_roles_rn();        // demographics as roots
std::vector<Role> ad_roles_rn_sn();     // roots plus cognitive sinks

// CSV round trip. File layout: first header cell "from\to", rows are source
// variables, columns targets; cells are 1 / 0 / X.
ConsensusGraph load_consensus_csv(const std::string& path);
void write_consensus_csv(const ConsensusGraph& graph, const std::string& path);

// Edge present iff pip >= threshold (inclusive, default 0.5).
EdgeMatrix threshold_graph(const Eigen::MatrixXd& pip, double threshold = 0.5);

struct PrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};

// Presence metrics over symmetrized adjacency: unordered pairs, excluded
// pairs removed from numerator and denominator.
PrecisionRecall presence_precision_recall(const EdgeMatrix& est,
                                          const ConsensusGraph& ref);

// Orientation metrics restricted to pairs adjacent in both symmetrized
// graphs: directed agreement counts; a pair the reference marks present in
// both directions accepts either estimated direction.
PrecisionRecall orientation_precision_recall(const EdgeMatrix& est,
                                             const ConsensusGraph& ref);

// +1 per missing pair, extra pair, or clear reversal (reversal costs 1);
// excluded pairs never contribute.
int structural_hamming_distance(const EdgeMatrix& est,
                                const ConsensusGraph& ref);

struct GraphMetrics {
  PrecisionRecall presence;
  PrecisionRecall orientation;
  int shd = 0;
  PrecisionRecall subset_presence;
  std::optional<int> subset_shd;
};

// Presence precision/recall and SHD on the induced subgraph over variables
// carrying no background knowledge. Throws when that subset is empty.
GraphMetrics subset_metrics(const EdgeMatrix& est, const ConsensusGraph& ref,
                            const BackgroundKnowledge& bk);

// Full metric set; subset fields are filled when bk is non-trivial.
GraphMetrics evaluate_graph(const EdgeMatrix& est, const ConsensusGraph& ref,
                            const BackgroundKnowledge& bk);

// Adjacency blocks for each graph plus entrywise difference masks for each
// unordered pair of graphs, in a long plot-ready table.
struct ComparisonMatrices {
  std::vector<std::string> graph_labels;
  std::vector<EdgeMatrix> adjacency;
  std::vector<std::pair<int, int>> pair_index;  // (a, b) with a > b
  std::vector<Eigen::MatrixXi> differences;     // adjacency[a] - adjacency[b]
};

ComparisonMatrices comparison_matrix(const std::vector<EdgeMatrix>& graphs,
                                     std::vector<std::string> labels = {});

void write_comparison_csv(const ComparisonMatrices& cm,
                          const std::vector<std::string>& names,
                          const std::string& path);

void write_metrics_csv(const std::vector<std::pair<std::string, GraphMetrics>>& rows,
                       const std::string& path);
void write_metrics_json(const std::vector<std::pair<std::string, GraphMetrics>>& rows,
                        const std::string& path);

}  // namespace bnlte
