#include "bnlte/model.hpp"

#include <cmath>
#include <stdexcept>

namespace bnlte {

ModelParameters ModelParameters::zero_initialized(int n, int p, int num_basis) {
  ModelParameters params;
  params.z = Eigen::VectorXd::Constant(n, 0.5);
  params.alpha = Eigen::MatrixXd::Zero(p, num_basis);
  params.beta.assign(static_cast<std::size_t>(p),
                     Eigen::MatrixXd::Zero(p, num_basis));
  params.edges = EdgeMatrix::Zero(p, p);
  params.sigma2 = Eigen::VectorXd::Ones(p);
  return params;
}

void ModelParameters::validate(const BackgroundKnowledge& bk) const {
  const int num_vars = p();
  for (int j = 0; j < num_vars; ++j) {
    if (!(sigma2[j] > 0.0)) {
      throw std::runtime_error("sigma2 must be positive at variable " +
                               std::to_string(j));
    }
  }
  if (!(tau_rough > 0.0) || !(tau_coef > 0.0)) {
    throw std::runtime_error("hyperparameters must be positive");
  }
  for (int j = 0; j < num_vars; ++j) {
    if (edges(j, j) != 0) throw std::runtime_error("self-loop in edges");
    for (int l = 0; l < num_vars; ++l) {
      if (bk.forbids(j, l) && edges(j, l) != 0) {
        throw std::runtime_error("forbidden edge set: " + std::to_string(l) +
                                 " -> " + std::to_string(j));
      }
    }
    if (bk.is_root(j) &&
        (alpha.row(j).cwiseAbs().maxCoeff() != 0.0 ||
         beta[static_cast<std::size_t>(j)].cwiseAbs().maxCoeff() != 0.0)) {
      throw std::runtime_error("root variable " + std::to_string(j) +
                               " has nonzero curve coefficients");
    }
  }
  if (!is_acyclic(edges)) throw std::runtime_error("edge matrix has a cycle");
}

double conditional_mean(const ModelParameters& params, const SplineBasis& basis,
                        const Eigen::VectorXd& x_row, double z_i, int j) {
  if (j < 0 || j >= params.p()) {
    throw std::out_of_range("conditional_mean: variable index " +
                            std::to_string(j));
  }
  Eigen::VectorXd phi;
  basis.evaluate_into(z_i, phi);
  double mean = params.alpha.row(j).dot(phi);
  const auto& beta_j = params.beta[static_cast<std::size_t>(j)];
  for (int l = 0; l < params.p(); ++l) {
    if (params.edges(j, l) == 0) continue;
    mean += beta_j.row(l).dot(phi) * x_row[l];
  }
  return mean;
}

Eigen::MatrixXd conditional_means(const ModelParameters& params,
                                  const SplineBasis& basis,
                                  const Dataset& data) {
  const int n = data.n();
  const int p = data.p();
  const Eigen::MatrixXd phi_rows = basis.evaluate_rows(params.z);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n, p);
  for (int j = 0; j < p; ++j) {
    if (data.roles[static_cast<std::size_t>(j)] == Role::Root) continue;
    means.col(j) = phi_rows * params.alpha.row(j).transpose();
    const auto& beta_j = params.beta[static_cast<std::size_t>(j)];
    for (int l = 0; l < p; ++l) {
      if (params.edges(j, l) == 0) continue;
      means.col(j).array() +=
          (phi_rows * beta_j.row(l).transpose()).array() *
          data.values.col(l).array();
    }
  }
  return means;
}

double log_likelihood(const ModelParameters& params, const SplineBasis& basis,
                      const Dataset& data) {
  constexpr double kLogTwoPi = 1.8378770664093453;
  const Eigen::MatrixXd means = conditional_means(params, basis, data);
  double ll = 0.0;
  for (int j = 0; j < data.p(); ++j) {
    if (data.roles[static_cast<std::size_t>(j)] == Role::Root) continue;
    const double s2 = params.sigma2[j];
    const double resid_ss =
        (data.values.col(j) - means.col(j)).squaredNorm();
    ll += -0.5 * data.n() * (kLogTwoPi + std::log(s2)) - 0.5 * resid_ss / s2;
  }
  if (!std::isfinite(ll)) {
    throw std::runtime_error("log_likelihood is not finite");
  }
  return ll;
}

double reconstruction_mse(const ModelParameters& params,
                          const SplineBasis& basis, const Dataset& data,
                          const BackgroundKnowledge& bk) {
  const Eigen::MatrixXd means = conditional_means(params, basis, data);
  double ss = 0.0;
  long cells = 0;
  for (int j = 0; j < data.p(); ++j) {
    if (bk.is_root(j)) continue;
    ss += (data.values.col(j) - means.col(j)).squaredNorm();
    cells += data.n();
  }
  if (cells == 0) {
    throw std::runtime_error("reconstruction_mse: no non-root variables");
  }
  return ss / static_cast<double>(cells);
}

Eigen::MatrixXd simulate_observations(const ModelParameters& params,
                                      const SplineBasis& basis,
                                      const BackgroundKnowledge& bk, Rng& rng) {
  const int n = static_cast<int>(params.z.size());
  const int p = params.p();
  Eigen::MatrixXd values(n, p);
  const std::vector<int> order = topological_order(params.edges);
  const Eigen::MatrixXd phi_rows = basis.evaluate_rows(params.z);
  for (int j : order) {
    if (bk.is_root(j)) {
      for (int i = 0; i < n; ++i) values(i, j) = rng.normal();
      continue;
    }
    Eigen::VectorXd mean = phi_rows * params.alpha.row(j).transpose();
    const auto& beta_j = params.beta[static_cast<std::size_t>(j)];
    for (int l = 0; l < p; ++l) {
      if (params.edges(j, l) == 0) continue;
      mean.array() += (phi_rows * beta_j.row(l).transpose()).array() *
                      values.col(l).array();
    }
    const double sd = std::sqrt(params.sigma2[j]);
    for (int i = 0; i < n; ++i) values(i, j) = mean[i] + sd * rng.normal();
  }
  return values;
}

}  // namespace bnlte
