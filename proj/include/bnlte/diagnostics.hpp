#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace bnlte {

// Traces of one scalar parameter across chains: row c is chain c.
struct TraceSet {
  Eigen::MatrixXd traces;  // m chains x T iterations
  std::string label;
};

// Split R-hat: each chain is halved, and the between/within variance ratio
// is computed over the 2m half-chains. Returns nullopt when the pooled
// within-chain variance is zero (the statistic is undefined there).
std::optional<double> split_rhat(const TraceSet& t);

// Effective sample size m*T / (1 + 2 sum rho_k) using chain-averaged
// autocorrelations with Geyer initial-monotone truncation. Returns nullopt
// for zero-variance traces.
std::optional<double> ess(const TraceSet& t);

struct DiagnosticsRow {
  std::string block;
  std::optional<double> rhat;
  std::optional<double> ess;
};

// Table emission, one row per parameter block (CSV columns:
// block,rhat,ess; undefined values serialize as NA / null).
void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows,
                           const std::string& path);
void write_diagnostics_json(const std::vector<DiagnosticsRow>& rows,
                            const std::string& path);

}  // namespace bnlte
