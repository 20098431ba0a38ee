#include "bnlte/graph_eval.hpp"

#include <json.hpp>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bnlte/io.hpp"

namespace bnlte {

namespace {

enum class PairClass { Absent, Present, Excluded };

// A pair is present as soon as one direction is known present; it is
// excluded only when neither direction is present and at least one is
// excluded.
PairClass classify_pair(const ConsensusGraph& ref, int u, int v) {
  const EdgeStatus forward = ref.at(v, u);   // u -> v
  const EdgeStatus backward = ref.at(u, v);  // v -> u
  if (forward == EdgeStatus::Present || backward == EdgeStatus::Present) {
    return PairClass::Present;
  }
  if (forward == EdgeStatus::Excluded || backward == EdgeStatus::Excluded) {
    return PairClass::Excluded;
  }
  return PairClass::Absent;
}

void check_dims(const EdgeMatrix& est, const ConsensusGraph& ref) {
  if (est.rows() != ref.status.rows() || est.cols() != ref.status.cols()) {
    throw std::invalid_argument("graph dimension mismatch");
  }
}

}  // namespace

ConsensusGraph ConsensusGraph::from_graph(const EdgeMatrix& edges,
                                          std::vector<std::string> names) {
  ConsensusGraph g;
  const int p = static_cast<int>(edges.rows());
  g.status = Eigen::MatrixXi::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int l = 0; l < p; ++l) {
      g.status(j, l) = j == l ? static_cast<int>(EdgeStatus::Excluded)
                              : (edges(j, l) ? 1 : 0);
    }
  }
  if (names.empty()) {
    for (int i = 0; i < p; ++i) names.push_back("V" + std::to_string(i));
  }
  g.names = std::move(names);
  return g;
}

const std::vector<std::string>& ad_variable_names() {
  static const std::vector<std::string> kNames = {
      "EDUCATION", "SEX",  "AGE",  "APOE",    "ICV",  "HIPPOCAMPUS",
      "AMYGDALA",  "TEMPORAL_LOBE", "AB40", "AB42", "PTAU217", "NFL",
      "GFAP",      "RAVLT", "TRABSCORE", "ADAS13"};
  return kNames;
}

std::vector<Role> ad_roles_rn() {
  std::vector<Role> roles(16, Role::Free);
  roles[0] = roles[1] = roles[2] = roles[3] = Role::Root;
  return roles;
}

std::vector<Role> ad_roles_rn_sn() {
  std::vector<Role> roles = ad_roles_rn();
  roles[13] = roles[14] = roles[15] = Role::Sink;
  return roles;
}

ConsensusGraph ad_consensus() {
  const auto& names = ad_variable_names();
  const int p = static_cast<int>(names.size());
  std::map<std::string, int> index;
  for (int i = 0; i < p; ++i) index[names[static_cast<std::size_t>(i)]] = i;

  ConsensusGraph g;
  g.names = names;
  g.status = Eigen::MatrixXi::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    g.status(i, i) = static_cast<int>(EdgeStatus::Excluded);
  }

  auto mark = [&](const std::string& from, const std::string& to,
                  EdgeStatus status) {
    g.status(index.at(to), index.at(from)) = static_cast<int>(status);
  };
  auto present = [&](const std::string& from,
                     const std::vector<std::string>& tos) {
    for (const auto& to : tos) mark(from, to, EdgeStatus::Present);
  };
  auto excluded = [&](const std::string& from,
                      const std::vector<std::string>& tos) {
    for (const auto& to : tos) mark(from, to, EdgeStatus::Excluded);
  };

  const std::vector<std::string> kVolumes = {"HIPPOCAMPUS", "AMYGDALA",
                                             "TEMPORAL_LOBE"};
  const std::vector<std::string> kCognitive = {"RAVLT", "TRABSCORE",
                                               "ADAS13"};

  present("AGE", {"ICV"});
  present("AGE", kVolumes);
  present("AGE", {"PTAU217", "AB42", "AB40", "GFAP"});
  present("AGE", kCognitive);
  present("EDUCATION", kCognitive);
  present("SEX", {"ICV"});
  present("SEX", kVolumes);
  present("SEX", {"PTAU217"});
  present("SEX", kCognitive);
  present("APOE", {"PTAU217", "AB42", "AB40"});
  present("ICV", kVolumes);
  present("HIPPOCAMPUS", kCognitive);
  present("AMYGDALA", kCognitive);
  present("TEMPORAL_LOBE", kCognitive);
  present("PTAU217", {"AB42", "AB40", "NFL"});
  present("PTAU217", kCognitive);
  present("AB42", {"AB40", "PTAU217", "NFL", "GFAP"});
  present("AB40", {"AB42", "PTAU217"});
  present("NFL", kVolumes);
  present("GFAP", kCognitive);

  // Edges left out of the evaluation for lack of causal consensus.
  excluded("EDUCATION", {"PTAU217", "AB40", "AB42", "NFL", "GFAP"});
  excluded("HIPPOCAMPUS", {"TEMPORAL_LOBE", "AMYGDALA"});
  excluded("TEMPORAL_LOBE", {"HIPPOCAMPUS"});
  excluded("AMYGDALA", {"HIPPOCAMPUS"});
  excluded("AB42", kCognitive);
  excluded("AB40", kCognitive);
  excluded("NFL", {"PTAU217", "AB40", "AB42"});
  excluded("GFAP", {"PTAU217", "AB40", "AB42", "NFL"});

  return g;
}

ConsensusGraph load_consensus_csv(const std::string& path) {
  const auto table = io::read_csv(path);
  const int p = static_cast<int>(table.header.size()) - 1;
  if (p < 1 || static_cast<int>(table.rows.size()) != p) {
    throw std::runtime_error(path + ": consensus matrix must be square");
  }
  ConsensusGraph g;
  g.names.assign(table.header.begin() + 1, table.header.end());
  g.status = Eigen::MatrixXi::Zero(p, p);
  for (int r = 0; r < p; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    if (row[0] != g.names[static_cast<std::size_t>(r)]) {
      throw std::runtime_error(path + ": row label '" + row[0] +
                               "' does not match column order");
    }
    for (int c = 0; c < p; ++c) {
      const std::string& cell = row[static_cast<std::size_t>(c + 1)];
      int status;
      if (cell == "1") status = static_cast<int>(EdgeStatus::Present);
      else if (cell == "0") status = static_cast<int>(EdgeStatus::Absent);
      else if (cell == "X" || cell == "x") status = static_cast<int>(EdgeStatus::Excluded);
      else throw std::runtime_error(path + ": bad cell '" + cell + "'");
      // File rows are sources, columns targets; internal storage is
      // (child, parent).
      g.status(c, r) = status;
    }
  }
  for (int i = 0; i < p; ++i) {
    g.status(i, i) = static_cast<int>(EdgeStatus::Excluded);
  }
  return g;
}

void write_consensus_csv(const ConsensusGraph& graph, const std::string& path) {
  std::ostringstream out;
  std::vector<std::string> header = {"from\\to"};
  header.insert(header.end(), graph.names.begin(), graph.names.end());
  out << io::format_csv_row(header);
  for (int r = 0; r < graph.p(); ++r) {
    std::vector<std::string> cells = {graph.names[static_cast<std::size_t>(r)]};
    for (int c = 0; c < graph.p(); ++c) {
      switch (graph.at(c, r)) {
        case EdgeStatus::Present: cells.push_back("1"); break;
        case EdgeStatus::Absent: cells.push_back("0"); break;
        case EdgeStatus::Excluded: cells.push_back("X"); break;
      }
    }
    out << io::format_csv_row(cells);
  }
  io::write_text_atomic(path, out.str());
}

EdgeMatrix threshold_graph(const Eigen::MatrixXd& pip, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("threshold must lie in [0, 1]");
  }
  const int p = static_cast<int>(pip.rows());
  EdgeMatrix edges = EdgeMatrix::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    for (int l = 0; l < p; ++l) {
      if (j == l) continue;
      edges(j, l) = pip(j, l) >= threshold ? 1 : 0;
    }
  }
  return edges;
}

PrecisionRecall presence_precision_recall(const EdgeMatrix& est,
                                          const ConsensusGraph& ref) {
  check_dims(est, ref);
  const int p = ref.p();
  long tp = 0, fp = 0, fn = 0;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      const PairClass pc = classify_pair(ref, u, v);
      if (pc == PairClass::Excluded) continue;
      const bool est_adj = est(v, u) != 0 || est(u, v) != 0;
      const bool ref_adj = pc == PairClass::Present;
      if (est_adj && ref_adj) ++tp;
      else if (est_adj) ++fp;
      else if (ref_adj) ++fn;
    }
  }
  PrecisionRecall out;
  if (tp + fp > 0) out.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) out.recall = static_cast<double>(tp) / (tp + fn);
  return out;
}

PrecisionRecall orientation_precision_recall(const EdgeMatrix& est,
                                             const ConsensusGraph& ref) {
  check_dims(est, ref);
  const int p = ref.p();
  long correct = 0, est_judged = 0, ref_directions = 0;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      if (classify_pair(ref, u, v) != PairClass::Present) continue;
      const bool est_adj = est(v, u) != 0 || est(u, v) != 0;
      if (!est_adj) continue;
      // Shared pair: score each estimated direction against the reference
      // cell it lands on; excluded cells are unjudgeable and drop out.
      const int est_cells[2][2] = {{v, u}, {u, v}};  // (child, parent)
      for (const auto& cell : est_cells) {
        if (est(cell[0], cell[1]) == 0) continue;
        const EdgeStatus s = ref.at(cell[0], cell[1]);
        if (s == EdgeStatus::Excluded) continue;
        ++est_judged;
        if (s == EdgeStatus::Present) ++correct;
      }
      if (ref.at(v, u) == EdgeStatus::Present) ++ref_directions;
      if (ref.at(u, v) == EdgeStatus::Present) ++ref_directions;
    }
  }
  PrecisionRecall out;
  if (est_judged > 0) out.precision = static_cast<double>(correct) / est_judged;
  if (ref_directions > 0) {
    out.recall = static_cast<double>(correct) / ref_directions;
  }
  return out;
}

int structural_hamming_distance(const EdgeMatrix& est,
                                const ConsensusGraph& ref) {
  check_dims(est, ref);
  const int p = ref.p();
  int shd = 0;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      const PairClass pc = classify_pair(ref, u, v);
      if (pc == PairClass::Excluded) continue;
      const bool est_adj = est(v, u) != 0 || est(u, v) != 0;
      const bool ref_adj = pc == PairClass::Present;
      if (est_adj != ref_adj) {
        ++shd;
        continue;
      }
      if (!est_adj) continue;
      // Both adjacent: charge one when every estimated direction lands on a
      // cell the reference marks absent (a clear reversal).
      bool any_agrees = false;
      bool any_unjudged = false;
      if (est(v, u) != 0) {
        if (ref.at(v, u) == EdgeStatus::Present) any_agrees = true;
        if (ref.at(v, u) == EdgeStatus::Excluded) any_unjudged = true;
      }
      if (est(u, v) != 0) {
        if (ref.at(u, v) == EdgeStatus::Present) any_agrees = true;
        if (ref.at(u, v) == EdgeStatus::Excluded) any_unjudged = true;
      }
      if (!any_agrees && !any_unjudged) ++shd;
    }
  }
  return shd;
}

namespace {

ConsensusGraph induced_subgraph(const ConsensusGraph& ref,
                                const std::vector<int>& keep) {
  ConsensusGraph sub;
  const int q = static_cast<int>(keep.size());
  sub.status.resize(q, q);
  for (int a = 0; a < q; ++a) {
    sub.names.push_back(ref.names[static_cast<std::size_t>(keep[a])]);
    for (int b = 0; b < q; ++b) {
      sub.status(a, b) = ref.status(keep[a], keep[b]);
    }
  }
  return sub;
}

EdgeMatrix induced_subgraph(const EdgeMatrix& est,
                            const std::vector<int>& keep) {
  const int q = static_cast<int>(keep.size());
  EdgeMatrix sub(q, q);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) sub(a, b) = est(keep[a], keep[b]);
  }
  return sub;
}

}  // namespace

GraphMetrics subset_metrics(const EdgeMatrix& est, const ConsensusGraph& ref,
                            const BackgroundKnowledge& bk) {
  check_dims(est, ref);
  std::vector<int> keep;
  for (int i = 0; i < ref.p(); ++i) {
    if (!bk.is_root(i) && !bk.is_sink(i)) keep.push_back(i);
  }
  if (keep.empty()) {
    throw std::runtime_error("subset_metrics: no variables outside background knowledge");
  }
  const EdgeMatrix est_sub = induced_subgraph(est, keep);
  const ConsensusGraph ref_sub = induced_subgraph(ref, keep);
  GraphMetrics m;
  m.subset_presence = presence_precision_recall(est_sub, ref_sub);
  m.subset_shd = structural_hamming_distance(est_sub, ref_sub);
  return m;
}

GraphMetrics evaluate_graph(const EdgeMatrix& est, const ConsensusGraph& ref,
                            const BackgroundKnowledge& bk) {
  GraphMetrics m;
  m.presence = presence_precision_recall(est, ref);
  m.orientation = orientation_precision_recall(est, ref);
  m.shd = structural_hamming_distance(est, ref);
  if (!bk.root_nodes.empty() || !bk.sink_nodes.empty()) {
    const GraphMetrics sub = subset_metrics(est, ref, bk);
    m.subset_presence = sub.subset_presence;
    m.subset_shd = sub.subset_shd;
  }
  return m;
}

ComparisonMatrices comparison_matrix(const std::vector<EdgeMatrix>& graphs,
                                     std::vector<std::string> labels) {
  if (graphs.size() < 2) {
    throw std::invalid_argument("comparison_matrix: need at least 2 graphs");
  }
  const auto dim = graphs[0].rows();
  for (const auto& g : graphs) {
    if (g.rows() != dim || g.cols() != dim) {
      throw std::invalid_argument("comparison_matrix: dimension mismatch");
    }
  }
  ComparisonMatrices cm;
  cm.adjacency = graphs;
  if (labels.empty()) {
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      labels.push_back("g" + std::to_string(i));
    }
  }
  cm.graph_labels = std::move(labels);
  for (std::size_t a = 1; a < graphs.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      cm.pair_index.emplace_back(static_cast<int>(a), static_cast<int>(b));
      cm.differences.push_back(graphs[a] - graphs[b]);
    }
  }
  return cm;
}

void write_comparison_csv(const ComparisonMatrices& cm,
                          const std::vector<std::string>& names,
                          const std::string& path) {
  std::ostringstream out;
  out << "matrix,child,parent,value\n";
  auto emit = [&](const std::string& label, const Eigen::MatrixXi& m) {
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
      for (Eigen::Index l = 0; l < m.cols(); ++l) {
        out << label << ',' << names[static_cast<std::size_t>(j)] << ','
            << names[static_cast<std::size_t>(l)] << ',' << m(j, l) << '\n';
      }
    }
  };
  for (std::size_t i = 0; i < cm.adjacency.size(); ++i) {
    emit(cm.graph_labels[i], cm.adjacency[i]);
  }
  for (std::size_t k = 0; k < cm.differences.size(); ++k) {
    const auto& [a, b] = cm.pair_index[k];
    emit("diff_" + cm.graph_labels[static_cast<std::size_t>(a)] + "_" +
             cm.graph_labels[static_cast<std::size_t>(b)],
         cm.differences[k]);
  }
  io::write_text_atomic(path, out.str());
}

namespace {

std::string opt_to_string(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream ss;
  ss.precision(10);
  ss << *v;
  return ss.str();
}

nlohmann::json opt_to_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

}  // namespace

void write_metrics_csv(
    const std::vector<std::pair<std::string, GraphMetrics>>& rows,
    const std::string& path) {
  std::ostringstream out;
  out << "setting,presence_precision,presence_recall,orientation_precision,"
         "orientation_recall,subset_presence_precision,subset_presence_recall,"
         "shd,subset_shd\n";
  for (const auto& [label, m] : rows) {
    out << label << ',' << opt_to_string(m.presence.precision) << ','
        << opt_to_string(m.presence.recall) << ','
        << opt_to_string(m.orientation.precision) << ','
        << opt_to_string(m.orientation.recall) << ','
        << opt_to_string(m.subset_presence.precision) << ','
        << opt_to_string(m.subset_presence.recall) << ',' << m.shd << ','
        << (m.subset_shd ? std::to_string(*m.subset_shd) : "NA") << '\n';
  }
  io::write_text_atomic(path, out.str());
}

void write_metrics_json(
    const std::vector<std::pair<std::string, GraphMetrics>>& rows,
    const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [label, m] : rows) {
    nlohmann::json item;
    item["setting"] = label;
    item["presence_precision"] = opt_to_json(m.presence.precision);
    item["presence_recall"] = opt_to_json(m.presence.recall);
    item["orientation_precision"] = opt_to_json(m.orientation.precision);
    item["orientation_recall"] = opt_to_json(m.orientation.recall);
    item["subset_presence_precision"] = opt_to_json(m.subset_presence.precision);
    item["subset_presence_recall"] = opt_to_json(m.subset_presence.recall);
    item["shd"] = m.shd;
    item["subset_shd"] =
        m.subset_shd ? nlohmann::json(*m.subset_shd) : nlohmann::json();
    arr.push_back(std::move(item));
  }
  io::write_text_atomic(path, arr.dump(2) + "\n");
}

}  // namespace bnlte
