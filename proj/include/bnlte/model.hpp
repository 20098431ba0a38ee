#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bnlte/data.hpp"
#include "bnlte/graph.hpp"
#include "bnlte/rng.hpp"
#include "bnlte/spline.hpp"

namespace bnlte {

// Full model state for one chain.
//
// Each variable j has a baseline curve a_j(z) = basis(z) . alpha.row(j) and,
// per candidate parent l, an edge coefficient curve
// b_jl(z) = basis(z) . beta[j].row(l). The binary indicator edges(j, l)
// gates parent l in the conditional mean of j. Root variables keep alpha and
// all incoming structure at exact zero; sink variables never appear as
// parents.
struct ModelParameters {
  Eigen::VectorXd z;                    // n pseudotimes in [0, 1]
  Eigen::MatrixXd alpha;                // p x B baseline spline coefficients
  std::vector<Eigen::MatrixXd> beta;    // p entries of p x B edge coefficients
  EdgeMatrix edges;                     // p x p indicators, edges(j,l): l -> j
  Eigen::VectorXd sigma2;               // p noise variances
  double tau_rough = 1.0;               // roughness precision
  double tau_coef = 1.0;                // spline coefficient variance
  double edge_prior_prob = 0.1;

  int p() const { return static_cast<int>(alpha.rows()); }
  int num_basis() const { return static_cast<int>(alpha.cols()); }

  static ModelParameters zero_initialized(int n, int p, int num_basis);
  void validate(const BackgroundKnowledge& bk) const;
};

// Conditional mean of variable j for one subject:
// a_j(z_i) + sum_l edges(j,l) * b_jl(z_i) * x_row[l].
double conditional_mean(const ModelParameters& params, const SplineBasis& basis,
                        const Eigen::VectorXd& x_row, double z_i, int j);

// n x p matrix of conditional means; root columns are zero.
Eigen::MatrixXd conditional_means(const ModelParameters& params,
                                  const SplineBasis& basis,
                                  const Dataset& data);

// Gaussian log-likelihood summed over subjects and non-root variables
// (root columns carry no likelihood term). Throws if the result is not
// finite.
double log_likelihood(const ModelParameters& params, const SplineBasis& basis,
                      const Dataset& data);

// Mean squared residual over (subject, non-root variable) cells.
double reconstruction_mse(const ModelParameters& params,
                          const SplineBasis& basis, const Dataset& data,
                          const BackgroundKnowledge& bk);

// Forward-simulates an observation matrix from the model: root columns are
// drawn iid standard normal, non-root columns follow the structural
// equations in topological order.
Eigen::MatrixXd simulate_observations(const ModelParameters& params,
                                      const SplineBasis& basis,
                                      const BackgroundKnowledge& bk, Rng& rng);

}  // namespace bnlte
