#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mixchain/diffusion.hpp"
#include "mixchain/metrics.hpp"
#include "mixchain/model.hpp"
#include "mixchain/rng.hpp"
#include "mixchain/samplers.hpp"

namespace mixchain {

/// Monte Carlo estimates of the one-step moments of the scaled DA jump
/// Delta = lambda_n (theta' - theta) started at theta = h / lambda_n:
///   b = r_n E[Delta], c = r_n E[Delta^2], d = r_n E[Delta^4].
struct CoefficientEstimate {
  double h = 0.0;
  double b_hat = 0.0;
  double c_hat = 0.0;
  double d_hat = 0.0;
  double se_b = 0.0;
  double se_c = 0.0;
  double se_d = 0.0;
  std::size_t reps = 0;
};

/// reps >= 1000 and h / lambda_n <= 1.
CoefficientEstimate estimate_coefficients(double h, const Dataset& ds,
                                          const PriorParams& prior, std::size_t reps,
                                          Rng& rng);

/// Kernels for risk curves; Iid draws from the posterior oracle directly and
/// serves as the m^{-1/2} control.
enum class RiskKernel { DA, IMH, Iid };

struct RiskConfig {
  RiskKernel kernel = RiskKernel::DA;
  ProposalKind proposal = ProposalKind::QuasiMoment;
  std::vector<std::size_t> m_list{1, 10, 100, 1000, 10000};
  std::size_t chains = 20;
  std::size_t grid_size = 512;
  double cap = 1.0;
  std::size_t posterior_points = 2048;
  std::size_t threads = 1;
};

struct RiskReport {
  std::vector<std::size_t> m;
  std::vector<double> r;        // w(e_m, Pi_n) on the h-scale
  std::vector<double> r_prime;  // w(e_m, e_1)
  std::vector<double> se_r;
  std::vector<double> se_r_prime;
  std::size_t chains = 0;
};

/// Chains start from the posterior (stationary start). Every measure is
/// binned onto grid_size cells of [0, upper end of the posterior grid] on
/// the h-scale before the distance is taken.
RiskReport risk_curves(const Dataset& ds, const MixtureFamily& family,
                       const PriorParams& prior, const RiskConfig& cfg,
                       std::uint64_t seed);

void write_risk_csv(std::ostream& out, const RiskReport& report);

struct SeTableConfig {
  MixtureFamily family = MixtureFamily::location_normal(1.0);
  PriorParams prior{};
  EpsilonRule epsilon{};
  std::vector<std::size_t> n_list{10, 100, 1000};
  std::vector<std::size_t> m_list{100, 1000, 10000, 100000};
  /// 0 selects the default per row: 1000 for n <= 100, 200 above.
  std::size_t replications = 0;
  KernelSpec kernel{};
  double theta_true = 0.0;
  std::size_t posterior_points = 2048;
  std::size_t threads = 1;

  std::size_t replications_for(std::size_t n) const;
};

struct SeCell {
  std::size_t n = 0;
  std::size_t m = 0;
  double se = 0.0;
  double mc_se = 0.0;
  std::size_t replications = 0;
};

struct SeTable {
  std::vector<std::size_t> n_list;
  std::vector<std::size_t> m_list;
  std::vector<SeCell> cells;  // row-major: n outer, m inner
  EpsilonRule epsilon{};
  std::string kernel;

  const SeCell& at(std::size_t row, std::size_t col) const {
    return cells[row * m_list.size() + col];
  }
};

/// Replication r of row i uses the stream derive_seed(seed, {i, r}): a fresh
/// dataset, its posterior mean, and one chain of length max(m_list) from the
/// moment estimator. The m-columns are the prefix means of that chain.
SeTable se_table(const SeTableConfig& cfg, std::uint64_t seed);

/// Per-replication scaled discrepancies lambda_n (mean of first m states -
/// posterior mean), one entry per m in m_list.
std::vector<double> se_replication(const SeTableConfig& cfg, std::size_t n,
                                   std::uint64_t stream_seed);

void write_se_csv(std::ostream& out, const SeTable& table);

struct ScalingFit {
  std::vector<double> slope_m;  // per n-row
  std::vector<double> ratio_n;  // per m-column: SE(n_{i+1}) / SE(n_i), row-major
};

/// Least-squares slope of log SE on log m per row; ratios of successive rows
/// per column.
ScalingFit scaling_fit(const SeTable& table);

/// Least-squares slope of log y on log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

/// Sample lag-k autocorrelation.
double autocorrelation(std::span<const double> path, std::size_t lag);

/// Standard error of the path mean from `batches` equal batches (the tail
/// that does not fill a batch is dropped).
double batch_means_se(std::span<const double> path, std::size_t batches = 100);

/// Extends a DA chain from theta0 until its Poisson clock passes `horizon`,
/// returning the embedded step process on the h-scale.
StepProcessPath embedded_da_path(double theta0, double horizon, const Dataset& ds,
                                 const PriorParams& prior, Rng& rng);

}  // namespace mixchain
