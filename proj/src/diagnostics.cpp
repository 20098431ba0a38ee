#include "bnlte/diagnostics.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bnlte/io.hpp"

namespace bnlte {

namespace {

double sample_variance(const Eigen::VectorXd& x) {
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

// Variance this small is rounding residue of a constant trace, for which
// the statistics are undefined.
double degenerate_floor(const Eigen::MatrixXd& traces) {
  const double scale = 1.0 + traces.cwiseAbs().maxCoeff();
  return (1e-13 * scale) * (1e-13 * scale);
}

// Autocovariance at lag t, normalized by T (biased form).
double autocov(const Eigen::VectorXd& x, int t) {
  const auto n = x.size();
  const double m = x.mean();
  double acc = 0.0;
  for (Eigen::Index s = 0; s + t < n; ++s) {
    acc += (x[s] - m) * (x[s + t] - m);
  }
  return acc / static_cast<double>(n);
}

}  // namespace

std::optional<double> split_rhat(const TraceSet& t) {
  const auto m = t.traces.rows();
  const auto len = t.traces.cols();
  if (m < 2) throw std::invalid_argument("split_rhat: need at least 2 chains");
  if (len < 4) throw std::invalid_argument("split_rhat: need at least 4 draws");

  const auto half = len / 2;
  std::vector<Eigen::VectorXd> halves;
  halves.reserve(static_cast<std::size_t>(2 * m));
  for (Eigen::Index c = 0; c < m; ++c) {
    halves.push_back(t.traces.row(c).segment(0, half).transpose());
    halves.push_back(t.traces.row(c).segment(len - half, half).transpose());
  }

  const auto k = static_cast<Eigen::Index>(halves.size());
  Eigen::VectorXd means(k);
  double within = 0.0;
  for (Eigen::Index c = 0; c < k; ++c) {
    means[c] = halves[static_cast<std::size_t>(c)].mean();
    within += sample_variance(halves[static_cast<std::size_t>(c)]);
  }
  within /= static_cast<double>(k);
  if (within <= degenerate_floor(t.traces)) return std::nullopt;

  const double h = static_cast<double>(half);
  const double between = h * sample_variance(means);
  const double var_plus = (h - 1.0) / h * within + between / h;
  return std::sqrt(var_plus / within);
}

std::optional<double> ess(const TraceSet& t) {
  const auto m = t.traces.rows();
  const auto len = t.traces.cols();
  if (m < 1) throw std::invalid_argument("ess: need at least 1 chain");
  if (len < 4) throw std::invalid_argument("ess: need at least 4 draws");

  double within = 0.0;
  Eigen::VectorXd chain_means(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    within += sample_variance(t.traces.row(c).transpose());
    chain_means[c] = t.traces.row(c).mean();
  }
  within /= static_cast<double>(m);

  const double n = static_cast<double>(len);
  double var_plus = (n - 1.0) / n * within;
  if (m >= 2) var_plus += sample_variance(chain_means);
  const double floor = degenerate_floor(t.traces);
  if (var_plus <= floor || within <= floor) return std::nullopt;

  auto rho = [&](int lag) {
    double acov = 0.0;
    for (Eigen::Index c = 0; c < m; ++c) {
      acov += autocov(t.traces.row(c).transpose(), lag);
    }
    acov /= static_cast<double>(m);
    return 1.0 - (within - acov) / var_plus;
  };

  // Geyer initial-monotone sequence over pair sums rho_{2k} + rho_{2k+1}.
  const double rho0 = rho(0);
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  const int max_lag = static_cast<int>(len) - 2;
  for (int k = 0; 2 * k + 1 <= max_lag; ++k) {
    double pair = (k == 0 ? rho0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau -= rho0;
  if (tau <= 0.0) return std::nullopt;
  return static_cast<double>(m) * n / tau;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows,
                           const std::string& path) {
  std::ostringstream out;
  out << "block,rhat,ess\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.block << ',';
    if (r.rhat) out << *r.rhat; else out << "NA";
    out << ',';
    if (r.ess) out << *r.ess; else out << "NA";
    out << '\n';
  }
  io::write_text_atomic(path, out.str());
}

void write_diagnostics_json(const std::vector<DiagnosticsRow>& rows,
                            const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json item;
    item["block"] = r.block;
    item["rhat"] = r.rhat ? nlohmann::json(*r.rhat) : nlohmann::json();
    item["ess"] = r.ess ? nlohmann::json(*r.ess) : nlohmann::json();
    arr.push_back(std::move(item));
  }
  io::write_text_atomic(path, arr.dump(2) + "\n");
}

}  // namespace bnlte
