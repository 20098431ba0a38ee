#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace bnlte {

// Average ranks (1-based, ties share the mean rank).
Eigen::VectorXd average_ranks(const Eigen::VectorXd& x);

// Spearman rank correlation; nullopt when either input has zero rank
// variance.
std::optional<double> spearman_correlation(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& b);

// Type-7 (linear interpolation) quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

}  // namespace bnlte
