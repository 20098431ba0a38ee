#include "bnlte/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bnlte {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x) {
  const auto n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && x[order[static_cast<std::size_t>(j + 1)]] ==
                            x[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) {
      ranks[order[static_cast<std::size_t>(k)]] = avg;
    }
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman_correlation(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  if (a.size() < 2) return std::nullopt;
  const Eigen::VectorXd ra = average_ranks(a);
  const Eigen::VectorXd rb = average_ranks(b);
  const double ma = ra.mean();
  const double mb = rb.mean();
  const Eigen::VectorXd da = ra.array() - ma;
  const Eigen::VectorXd db = rb.array() - mb;
  const double va = da.squaredNorm();
  const double vb = db.squaredNorm();
  if (va <= 0.0 || vb <= 0.0) return std::nullopt;
  return da.dot(db) / std::sqrt(va * vb);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace bnlte
