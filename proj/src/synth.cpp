#include "bnlte/synth.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bnlte/graph_eval.hpp"
#include "bnlte/io.hpp"
#include "bnlte/rng.hpp"

namespace bnlte {

double CurveSpec::operator()(double z, const SplineBasis& basis) const {
  switch (kind) {
    case Kind::Constant:
      return value_start;
    case Kind::LinearRamp:
      return value_start + (value_end - value_start) * z;
    case Kind::Plateau:
      return value_start + (value_end - value_start) /
                               (1.0 + std::exp(-steepness * (z - midpoint)));
    case Kind::Spline: {
      const Eigen::VectorXd phi = basis.evaluate(z);
      if (static_cast<int>(spline_coefficients.size()) != basis.num_basis()) {
        throw std::runtime_error("spline curve coefficient count mismatch");
      }
      double value = 0.0;
      for (int k = 0; k < basis.num_basis(); ++k) {
        value += spline_coefficients[static_cast<std::size_t>(k)] * phi[k];
      }
      return value;
    }
  }
  return 0.0;
}

double CurveSpec::range(const SplineBasis& basis) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int g = 0; g <= 100; ++g) {
    const double v = (*this)(g / 100.0, basis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

void GroundTruthSpec::validate() const {
  if (p < 2) throw std::invalid_argument("spec needs p >= 2");
  if (!is_acyclic(true_edges)) {
    throw std::invalid_argument("true_edges contains a cycle");
  }
  for (int j = 0; j < p; ++j) {
    if (!(noise_sd[j] > 0.0)) {
      throw std::invalid_argument("noise_sd must be positive");
    }
  }
  for (std::size_t k = 1; k < diagnosis_thresholds.size(); ++k) {
    if (diagnosis_thresholds[k] <= diagnosis_thresholds[k - 1]) {
      throw std::invalid_argument("diagnosis thresholds must be ascending");
    }
  }
}

namespace {

CurveSpec random_varying_curve(Rng& rng, const SplineBasis& basis) {
  // Sign-stable levels bounded away from zero: the curve varies along z
  // (identifiability) while the edge stays detectable at every stage.
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  double low = sign * (0.7 + 0.3 * rng.uniform());
  double high = sign * (1.3 + 0.5 * rng.uniform());
  if (rng.bernoulli(0.5)) std::swap(low, high);

  CurveSpec curve;
  const auto choice = rng.uniform_int(0, 2);
  if (choice == 0) {
    curve.kind = CurveSpec::Kind::LinearRamp;
    curve.value_start = low;
    curve.value_end = high;
  } else if (choice == 1) {
    curve.kind = CurveSpec::Kind::Plateau;
    curve.value_start = low;
    curve.value_end = high;
    curve.midpoint = 0.3 + 0.4 * rng.uniform();
    curve.steepness = 6.0 + 8.0 * rng.uniform();
  } else {
    curve.kind = CurveSpec::Kind::Spline;
    curve.spline_coefficients.resize(
        static_cast<std::size_t>(basis.num_basis()));
    for (auto& c : curve.spline_coefficients) {
      c = sign * (0.5 + 0.9 * rng.uniform());
    }
    // Tilt so the curve varies even if the random levels happen to agree.
    const int b = basis.num_basis();
    for (int k = 0; k < b; ++k) {
      curve.spline_coefficients[static_cast<std::size_t>(k)] +=
          sign * 0.6 * static_cast<double>(k) / std::max(1, b - 1);
    }
    if (curve.range(basis) <= 0.1) {
      curve.kind = CurveSpec::Kind::LinearRamp;
      curve.value_start = low;
      curve.value_end = high;
    }
  }
  return curve;
}

CurveSpec constant_curve(double value) {
  CurveSpec curve;
  curve.kind = CurveSpec::Kind::Constant;
  curve.value_start = value;
  return curve;
}

}  // namespace

GroundTruthSpec generate_spec(int p, double edge_density,
                              double z_varying_fraction, std::uint64_t seed,
                              int num_roots, int num_sinks) {
  if (!(edge_density >= 0.0 && edge_density <= 1.0)) {
    throw std::invalid_argument("edge_density must lie in [0, 1]");
  }
  if (!(z_varying_fraction >= 0.0 && z_varying_fraction <= 1.0)) {
    throw std::invalid_argument("z_varying_fraction must lie in [0, 1]");
  }
  if (num_roots + num_sinks >= p) {
    throw std::invalid_argument("too many constrained variables");
  }

  Rng rng(seed);
  GroundTruthSpec spec;
  spec.p = p;
  for (int i = 0; i < p; ++i) spec.names.push_back("V" + std::to_string(i));
  spec.roles.assign(static_cast<std::size_t>(p), Role::Free);
  for (int i = 0; i < num_roots; ++i) spec.roles[static_cast<std::size_t>(i)] = Role::Root;
  for (int i = 0; i < num_sinks; ++i) {
    spec.roles[static_cast<std::size_t>(p - 1 - i)] = Role::Sink;
  }
  const BackgroundKnowledge bk = BackgroundKnowledge::from_roles(spec.roles);

  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<std::pair<int, int>> candidates;  // (child, parent)
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      const int parent = order[static_cast<std::size_t>(a)];
      const int child = order[static_cast<std::size_t>(b)];
      if (!bk.forbids(child, parent)) candidates.emplace_back(child, parent);
    }
  }
  const auto target = static_cast<std::size_t>(
      std::lround(edge_density * static_cast<double>(candidates.size())));
  rng.shuffle(candidates);
  candidates.resize(std::min(target, candidates.size()));

  spec.true_edges = EdgeMatrix::Zero(p, p);
  spec.edge_curves.assign(
      static_cast<std::size_t>(p),
      std::vector<CurveSpec>(static_cast<std::size_t>(p)));

  const SplineBasis basis(spec.spline_interior_knots, 3);
  const auto num_varying = static_cast<std::size_t>(
      std::ceil(z_varying_fraction * static_cast<double>(candidates.size())));
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto [child, parent] = candidates[k];
    spec.true_edges(child, parent) = 1;
    CurveSpec curve;
    if (k < num_varying) {
      curve = random_varying_curve(rng, basis);
    } else {
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      curve = constant_curve(sign * (0.9 + 0.6 * rng.uniform()));
    }
    spec.edge_curves[static_cast<std::size_t>(child)]
                    [static_cast<std::size_t>(parent)] = curve;
  }

  spec.baseline_curves.assign(static_cast<std::size_t>(p), constant_curve(0.0));
  for (int j = 0; j < p; ++j) {
    if (spec.roles[static_cast<std::size_t>(j)] == Role::Root) continue;
    CurveSpec curve = random_varying_curve(rng, basis);
    // Baselines sweep a wider arc so pseudotime is anchored by marginal
    // trends, like biomarker trajectories.
    curve.value_start *= 1.3;
    curve.value_end *= 1.3;
    spec.baseline_curves[static_cast<std::size_t>(j)] = curve;
  }

  spec.noise_sd = Eigen::VectorXd::Constant(p, 0.4);
  for (int j = 0; j < p; ++j) {
    if (spec.roles[static_cast<std::size_t>(j)] == Role::Root) {
      spec.noise_sd[j] = 1.0;
    }
  }
  spec.diagnosis_thresholds = {215.0 / 380.0, 332.0 / 380.0};
  spec.diagnosis_labels = {"CN", "MCI", "AD"};
  spec.validate();
  return spec;
}

GroundTruthSpec ad_like_spec(std::uint64_t seed) {
  Rng rng(seed);
  GroundTruthSpec spec;
  spec.names = ad_variable_names();
  spec.p = static_cast<int>(spec.names.size());
  spec.roles = ad_roles_rn_sn();

  // DAG subset of the reference edges: the three two-cycles among the
  // plasma markers keep only the pTau/AB42-sourced direction.
  const ConsensusGraph consensus = ad_consensus();
  spec.true_edges = EdgeMatrix::Zero(spec.p, spec.p);
  for (int j = 0; j < spec.p; ++j) {
    for (int l = 0; l < spec.p; ++l) {
      if (consensus.at(j, l) == EdgeStatus::Present) {
        spec.true_edges(j, l) = 1;
      }
    }
  }
  const int ab40 = 8, ab42 = 9, ptau = 10;
  spec.true_edges(ptau, ab42) = 0;  // drop AB42 -> PTAU217
  spec.true_edges(ptau, ab40) = 0;  // drop AB40 -> PTAU217
  spec.true_edges(ab42, ab40) = 0;  // drop AB40 -> AB42

  const SplineBasis basis(spec.spline_interior_knots, 3);
  spec.edge_curves.assign(
      static_cast<std::size_t>(spec.p),
      std::vector<CurveSpec>(static_cast<std::size_t>(spec.p)));
  for (int j = 0; j < spec.p; ++j) {
    for (int l = 0; l < spec.p; ++l) {
      if (!spec.true_edges(j, l)) continue;
      CurveSpec curve = random_varying_curve(rng, basis);
      // Many parents per child here; moderate effect sizes keep the forward
      // pass on a sane scale.
      curve.value_start *= 0.45;
      curve.value_end *= 0.45;
      for (auto& c : curve.spline_coefficients) c *= 0.45;
      spec.edge_curves[static_cast<std::size_t>(j)]
                      [static_cast<std::size_t>(l)] = curve;
    }
  }

  spec.baseline_curves.assign(static_cast<std::size_t>(spec.p),
                              constant_curve(0.0));
  for (int j = 0; j < spec.p; ++j) {
    if (spec.roles[static_cast<std::size_t>(j)] == Role::Root) continue;
    spec.baseline_curves[static_cast<std::size_t>(j)] =
        random_varying_curve(rng, basis);
  }

  spec.noise_sd = Eigen::VectorXd::Constant(spec.p, 0.4);
  for (int j = 0; j < 4; ++j) spec.noise_sd[j] = 1.0;
  spec.diagnosis_thresholds = {215.0 / 380.0, 332.0 / 380.0};
  spec.diagnosis_labels = {"CN", "MCI", "AD"};
  spec.validate();
  return spec;
}

std::pair<Dataset, Eigen::VectorXd> simulate_dataset(
    const GroundTruthSpec& spec, int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("simulate_dataset: n must be >= 2");
  spec.validate();
  Rng rng(seed);
  const SplineBasis basis = spec.basis();

  Eigen::VectorXd true_z(n);
  for (int i = 0; i < n; ++i) true_z[i] = rng.uniform();

  Eigen::MatrixXd raw(n, spec.p);
  const std::vector<int> order = topological_order(spec.true_edges);
  for (int j : order) {
    const bool is_root = spec.roles[static_cast<std::size_t>(j)] == Role::Root;
    for (int i = 0; i < n; ++i) {
      if (is_root) {
        raw(i, j) = rng.normal();
        continue;
      }
      double mean =
          spec.baseline_curves[static_cast<std::size_t>(j)](true_z[i], basis);
      for (int l = 0; l < spec.p; ++l) {
        if (!spec.true_edges(j, l)) continue;
        mean += spec.edge_curves[static_cast<std::size_t>(j)]
                                [static_cast<std::size_t>(l)](true_z[i], basis) *
                raw(i, l);
      }
      raw(i, j) = mean + spec.noise_sd[j] * rng.normal();
    }
  }

  Dataset data = standardize(raw, spec.names, spec.roles);

  data.diagnosis.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::size_t label = 0;
    for (double cut : spec.diagnosis_thresholds) {
      if (true_z[i] >= cut) ++label;
    }
    data.diagnosis.push_back(
        spec.diagnosis_labels[std::min(label, spec.diagnosis_labels.size() - 1)]);
  }

  data.age.resize(n);
  for (int i = 0; i < n; ++i) {
    data.age[i] = spec.age_intercept + spec.age_slope * true_z[i] +
                  spec.age_noise_sd * rng.normal();
  }

  return {std::move(data), std::move(true_z)};
}

ModelParameters truth_as_model_parameters(const GroundTruthSpec& spec,
                                          const SplineBasis& basis,
                                          const Dataset& data,
                                          const Eigen::VectorXd& true_z) {
  const int p = spec.p;
  const int b = basis.num_basis();
  const SplineBasis truth_basis = spec.basis();

  // Least-squares projection of a curve onto the model basis; exact for
  // curves inside the span.
  const int grid = 201;
  Eigen::VectorXd zg = Eigen::VectorXd::LinSpaced(grid, 0.0, 1.0);
  const Eigen::MatrixXd phi = basis.evaluate_rows(zg);
  const Eigen::MatrixXd gram = phi.transpose() * phi;
  const Eigen::LLT<Eigen::MatrixXd> chol(gram);
  auto project = [&](const std::vector<double>& values) {
    Eigen::VectorXd f(grid);
    for (int g = 0; g < grid; ++g) f[g] = values[static_cast<std::size_t>(g)];
    return chol.solve(phi.transpose() * f).eval();
  };
  auto sample_curve = [&](const CurveSpec& curve) {
    std::vector<double> values(static_cast<std::size_t>(grid));
    for (int g = 0; g < grid; ++g) {
      values[static_cast<std::size_t>(g)] = curve(zg[g], truth_basis);
    }
    return values;
  };

  ModelParameters params =
      ModelParameters::zero_initialized(static_cast<int>(true_z.size()), p, b);
  params.z = true_z;
  params.edges = spec.true_edges;

  for (int j = 0; j < p; ++j) {
    const auto sj = data.standardization[static_cast<std::size_t>(j)];
    if (spec.roles[static_cast<std::size_t>(j)] == Role::Root) {
      params.sigma2[j] = 1.0;
      continue;
    }
    params.sigma2[j] = (spec.noise_sd[j] / sj.second) *
                       (spec.noise_sd[j] / sj.second);
    // Baseline in standardized coordinates absorbs the parent means:
    // (a_j(z) - m_j + sum_l b_jl(z) m_l) / s_j.
    std::vector<double> base =
        sample_curve(spec.baseline_curves[static_cast<std::size_t>(j)]);
    for (int l = 0; l < p; ++l) {
      if (!spec.true_edges(j, l)) continue;
      const auto sl = data.standardization[static_cast<std::size_t>(l)];
      const std::vector<double> edge = sample_curve(
          spec.edge_curves[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)]);
      for (int g = 0; g < grid; ++g) {
        base[static_cast<std::size_t>(g)] +=
            edge[static_cast<std::size_t>(g)] * sl.first;
      }
      std::vector<double> scaled = edge;
      for (auto& v : scaled) v *= sl.second / sj.second;
      params.beta[static_cast<std::size_t>(j)].row(l) =
          project(scaled).transpose();
    }
    for (auto& v : base) {
      v = (v - sj.first) / sj.second;
    }
    params.alpha.row(j) = project(base).transpose();
  }
  return params;
}

namespace {

nlohmann::json curve_to_json(const CurveSpec& curve) {
  nlohmann::json j;
  switch (curve.kind) {
    case CurveSpec::Kind::Constant: j["kind"] = "constant"; break;
    case CurveSpec::Kind::LinearRamp: j["kind"] = "linear_ramp"; break;
    case CurveSpec::Kind::Plateau: j["kind"] = "plateau"; break;
    case CurveSpec::Kind::Spline: j["kind"] = "spline"; break;
  }
  j["value_start"] = curve.value_start;
  j["value_end"] = curve.value_end;
  j["midpoint"] = curve.midpoint;
  j["steepness"] = curve.steepness;
  if (!curve.spline_coefficients.empty()) {
    j["spline_coefficients"] = curve.spline_coefficients;
  }
  return j;
}

CurveSpec curve_from_json(const nlohmann::json& j) {
  CurveSpec curve;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") curve.kind = CurveSpec::Kind::Constant;
  else if (kind == "linear_ramp") curve.kind = CurveSpec::Kind::LinearRamp;
  else if (kind == "plateau") curve.kind = CurveSpec::Kind::Plateau;
  else if (kind == "spline") curve.kind = CurveSpec::Kind::Spline;
  else throw std::runtime_error("unknown curve kind: " + kind);
  curve.value_start = j.at("value_start").get<double>();
  curve.value_end = j.at("value_end").get<double>();
  curve.midpoint = j.at("midpoint").get<double>();
  curve.steepness = j.at("steepness").get<double>();
  if (j.contains("spline_coefficients")) {
    curve.spline_coefficients =
        j.at("spline_coefficients").get<std::vector<double>>();
  }
  return curve;
}

}  // namespace

void write_spec_json(const GroundTruthSpec& spec, const std::string& path) {
  nlohmann::json j;
  j["p"] = spec.p;
  j["names"] = spec.names;
  nlohmann::json roles = nlohmann::json::array();
  for (auto r : spec.roles) roles.push_back(role_to_string(r));
  j["roles"] = std::move(roles);
  j["true_edges"] = io::int_matrix_to_json(spec.true_edges);
  nlohmann::json edge_curves = nlohmann::json::array();
  for (int child = 0; child < spec.p; ++child) {
    nlohmann::json row = nlohmann::json::array();
    for (int parent = 0; parent < spec.p; ++parent) {
      if (spec.true_edges(child, parent)) {
        row.push_back(curve_to_json(
            spec.edge_curves[static_cast<std::size_t>(child)]
                            [static_cast<std::size_t>(parent)]));
      } else {
        row.push_back(nullptr);
      }
    }
    edge_curves.push_back(std::move(row));
  }
  j["edge_curves"] = std::move(edge_curves);
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& c : spec.baseline_curves) baselines.push_back(curve_to_json(c));
  j["baseline_curves"] = std::move(baselines);
  j["noise_sd"] = io::vector_to_json(spec.noise_sd);
  j["diagnosis_thresholds"] = spec.diagnosis_thresholds;
  j["diagnosis_labels"] = spec.diagnosis_labels;
  j["age_intercept"] = spec.age_intercept;
  j["age_slope"] = spec.age_slope;
  j["age_noise_sd"] = spec.age_noise_sd;
  j["spline_interior_knots"] = spec.spline_interior_knots;
  io::write_text_atomic(path, j.dump(2) + "\n");
}

GroundTruthSpec load_spec_json(const std::string& path) {
  const auto j = nlohmann::json::parse(io::read_text(path));
  GroundTruthSpec spec;
  spec.p = j.at("p").get<int>();
  spec.names = j.at("names").get<std::vector<std::string>>();
  for (const auto& r : j.at("roles")) {
    spec.roles.push_back(role_from_string(r.get<std::string>()));
  }
  spec.true_edges = io::int_matrix_from_json(j.at("true_edges"));
  spec.edge_curves.assign(
      static_cast<std::size_t>(spec.p),
      std::vector<CurveSpec>(static_cast<std::size_t>(spec.p)));
  const auto& edge_curves = j.at("edge_curves");
  for (int child = 0; child < spec.p; ++child) {
    for (int parent = 0; parent < spec.p; ++parent) {
      const auto& cell = edge_curves.at(static_cast<std::size_t>(child))
                             .at(static_cast<std::size_t>(parent));
      if (!cell.is_null()) {
        spec.edge_curves[static_cast<std::size_t>(child)]
                        [static_cast<std::size_t>(parent)] =
            curve_from_json(cell);
      }
    }
  }
  for (const auto& c : j.at("baseline_curves")) {
    spec.baseline_curves.push_back(curve_from_json(c));
  }
  spec.noise_sd = io::vector_from_json(j.at("noise_sd"));
  spec.diagnosis_thresholds =
      j.at("diagnosis_thresholds").get<std::vector<double>>();
  spec.diagnosis_labels = j.at("diagnosis_labels").get<std::vector<std::string>>();
  spec.age_intercept = j.at("age_intercept").get<double>();
  spec.age_slope = j.at("age_slope").get<double>();
  spec.age_noise_sd = j.at("age_noise_sd").get<double>();
  spec.spline_interior_knots = j.at("spline_interior_knots").get<int>();
  spec.validate();
  return spec;
}

}  // namespace bnlte
