#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bnlte/data.hpp"
#include "bnlte/graph.hpp"
#include "bnlte/model.hpp"
#include "bnlte/spline.hpp"

namespace bnlte {

// Shape of one coefficient curve as a function of pseudotime.
struct CurveSpec {
  enum class Kind { Constant, LinearRamp, Plateau, Spline };
  Kind kind = Kind::Constant;
  double value_start = 0.0;   // Constant: the value; ramp/plateau: level at z=0
  double value_end = 0.0;     // ramp/plateau: level at z=1
  double midpoint = 0.5;      // plateau inflection
  double steepness = 10.0;    // plateau slope
  std::vector<double> spline_coefficients;  // Kind::Spline

  double operator()(double z, const SplineBasis& basis) const;
  bool is_constant() const { return kind == Kind::Constant; }
  double range(const SplineBasis& basis) const;  // max - min over a fine grid
};

// Ground-truth generative model for recovery experiments.
struct GroundTruthSpec {
  int p = 0;
  std::vector<std::string> names;
  std::vector<Role> roles;
  EdgeMatrix true_edges;                         // (child, parent)
  std::vector<std::vector<CurveSpec>> edge_curves;  // [child][parent]
  std::vector<CurveSpec> baseline_curves;
  Eigen::VectorXd noise_sd;
  std::vector<double> diagnosis_thresholds;      // ascending cuts on true z
  std::vector<std::string> diagnosis_labels;
  double age_intercept = 70.0;
  double age_slope = 5.0;
  double age_noise_sd = 7.07;                    // Spearman(age, z) near 0.2
  int spline_interior_knots = 5;

  SplineBasis basis() const { return SplineBasis(spline_interior_knots, 3); }
  void validate() const;
};

// Random ground truth: random topological order, edges at the requested
// density, and at least `z_varying_fraction` of edge curves non-constant
// (the identifiability condition). Roots get no parents or baselines, sinks
// no children.
GroundTruthSpec generate_spec(int p, double edge_density,
                              double z_varying_fraction, std::uint64_t seed,
                              int num_roots = 0, int num_sinks = 0);

// A 16-variable cohort spec shaped like the Alzheimer's analysis: the
// standard variable names and roles, a DAG subset of the reference edges,
// and class proportions 215/117/48 over CN/MCI/AD.
GroundTruthSpec ad_like_spec(std::uint64_t seed);

// Forward-simulates a cohort: true z uniform on [0,1], variables evaluated
// in topological order, then column standardization. Diagnosis and age are
// attached per the spec. Returns the dataset plus the true pseudotimes.
std::pair<Dataset, Eigen::VectorXd> simulate_dataset(
    const GroundTruthSpec& spec, int n, std::uint64_t seed);

// Expresses the ground truth in model coordinates (spline-projected curves
// rescaled to the standardized columns). Exact whenever the truth curves lie
// in the basis span (constant, ramp, spline kinds).
ModelParameters truth_as_model_parameters(const GroundTruthSpec& spec,
                                          const SplineBasis& basis,
                                          const Dataset& data,
                                          const Eigen::VectorXd& true_z);

// JSON round trip for specs.
void write_spec_json(const GroundTruthSpec& spec, const std::string& path);
GroundTruthSpec load_spec_json(const std::string& path);

}  // namespace bnlte
