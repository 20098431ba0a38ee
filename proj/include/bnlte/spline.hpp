#pragma once

#include <Eigen/Dense>
#include <vector>

namespace bnlte {

// Clamped B-spline basis on [0, 1] with uniformly spaced interior knots.
//
// The same basis is shared by the baseline curves a_j(z) and the edge
// coefficient curves b_jl(z). Endpoint knots are repeated degree+1 times, so
// the basis interpolates the first/last coefficient at z = 0 / z = 1 and the
// number of basis functions is num_interior_knots + degree + 1.
class SplineBasis {
 public:
  explicit SplineBasis(int num_interior_knots, int degree = 3);

  int degree() const { return degree_; }
  int num_interior_knots() const { return num_interior_; }
  int num_basis() const { return num_basis_; }
  const std::vector<double>& knot_vector() const { return knots_; }

  // Set when built with a non-cubic degree; cubic is the production choice,
  // other degrees are allowed for testing and reduced models.
  bool nonstandard_degree() const { return degree_ != 3; }

  // Basis values at z via the Cox-de Boor recursion. At most degree+1
  // entries are nonzero and the entries sum to 1. Throws on z outside [0, 1]
  // (pseudotime lives on the unit interval).
  Eigen::VectorXd evaluate(double z) const;

  // Allocation-free variant for hot paths; resizes `out` to num_basis.
  void evaluate_into(double z, Eigen::VectorXd& out) const;

  // Rows of the basis matrix for a vector of evaluation points.
  Eigen::MatrixXd evaluate_rows(const Eigen::VectorXd& z) const;

  // Second-order difference penalty K = D'D on coefficient vectors
  // (P-spline roughness). Positive semidefinite with rank num_basis - 2;
  // constant and linear coefficient sequences lie in its null space.
  Eigen::MatrixXd roughness_penalty() const;

 private:
  int find_span(double z) const;

  int degree_;
  int num_interior_;
  int num_basis_;
  std::vector<double> knots_;
};

}  // namespace bnlte
