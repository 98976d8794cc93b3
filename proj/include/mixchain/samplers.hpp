#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "mixchain/model.hpp"
#include "mixchain/quadrature.hpp"
#include "mixchain/rng.hpp"

namespace mixchain {

using LogTarget = std::function<double(double)>;

/// Unnormalized log posterior of theta: log likelihood ratio plus log prior.
class LogPosterior {
 public:
  LogPosterior(const Dataset& ds, const PriorParams& prior) : ds_(&ds), prior_(prior) {}
  double operator()(double theta) const;

 private:
  const Dataset* ds_;
  PriorParams prior_;
};

/// Normal(mu, sigma^2) restricted to [lo, hi].
class TruncatedNormal {
 public:
  TruncatedNormal(double mu, double sigma, double lo = 0.0, double hi = 1.0);

  double sample(Rng& rng) const;
  double log_density(double x) const;
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  /// log(Phi(beta) - Phi(alpha)) for the standardized bounds.
  double log_mass() const noexcept { return log_mass_; }

 private:
  double sample_standard(double alpha, double beta, Rng& rng) const;

  double mu_, sigma_, lo_, hi_;
  double alpha_, beta_;
  double log_mass_;
};

enum class ProposalKind {
  QuasiShift,   // posterior of the surrogate family F_{eps theta}
  QuasiMoment,  // truncated normal from the KL-nearest normal location model
};

/// Independence proposal for theta on [0, 1]. The QuasiMoment variant also
/// records tau^2 = Var_{F_0}(x) / F_0(x g(x))^2, which governs the joint
/// limit of (Z_n, lambda_n mu_Q); nothing in the samplers consumes it.
class Proposal {
 public:
  static Proposal tabulated(PiecewiseLinearDensity table);
  static Proposal truncated(TruncatedNormal tn, double tau2 = 0.0);

  ProposalKind kind() const noexcept;
  double sample(Rng& rng) const;
  double log_density(double theta) const;
  const PiecewiseLinearDensity* table() const noexcept;
  const TruncatedNormal* truncated_normal() const noexcept;
  double tau2() const noexcept { return tau2_; }

 private:
  explicit Proposal(std::variant<PiecewiseLinearDensity, TruncatedNormal> impl)
      : impl_(std::move(impl)) {}

  std::variant<PiecewiseLinearDensity, TruncatedNormal> impl_;
  double tau2_ = 0.0;
};

/// QuasiShift: density prop. to prod_i f_{eps theta}(x_i)/f_0(x_i) times the
/// Beta prior, tabulated on an adaptive grid and sampled by inverse CDF.
/// QuasiMoment: truncated normal on [0, 1] with
///   mu_Q = (xbar - F_0(x)) / (F_eps(x) - F_0(x)),
///   sigma_Q^2 = sigma_KL^2 / (n (F_eps(x) - F_0(x))^2),
///   sigma_KL^2 = (Var_{F_0} + Var_{F_eps}) / 2.
Proposal build_proposal(ProposalKind kind, const Dataset& ds,
                        const MixtureFamily& family, const PriorParams& prior);

/// Coin probabilities theta s_i / (1 - theta + theta s_i).
std::vector<double> head_probabilities(double theta, const Dataset& ds);

/// Number of heads among the n augmentation coins at theta.
std::size_t da_head_count(double theta, const Dataset& ds, Rng& rng);

/// One data-augmentation sweep: coins, then Beta(alpha1 + n1, alpha0 + n - n1).
double da_step(double theta, const Dataset& ds, const PriorParams& prior, Rng& rng);

struct ImhResult {
  double theta;
  bool accepted;
  double log_weight;  // log target - log proposal at the returned state
};

/// Independence Metropolis-Hastings transition from (theta, log_weight),
/// where log_weight = log_target(theta) - log proposal(theta).
ImhResult imh_step(double theta, double log_weight, const LogTarget& log_target,
                   const Proposal& proposal, Rng& rng);
ImhResult imh_step(double theta, const LogTarget& log_target,
                   const Proposal& proposal, Rng& rng);

struct KernelSpec {
  enum class Kind { DA, IMH };
  Kind kind = Kind::DA;
  ProposalKind proposal = ProposalKind::QuasiMoment;

  std::string id() const;
  /// "da", "imh-moment" (alias "mh"), "imh-shift".
  static KernelSpec parse(const std::string& text);
};

struct ChainPath {
  std::vector<double> values;
  std::string kernel;
  std::uint64_t seed = 0;
  std::size_t accepted = 0;
  std::size_t n = 0;
  double epsilon = 0.0;
  double lambda = 0.0;

  double acceptance_rate() const;
};

/// Chain of length m starting at theta0 (values[0] = theta0).
ChainPath run_chain(const KernelSpec& kernel, double theta0, std::size_t m,
                    const Dataset& ds, const MixtureFamily& family,
                    const PriorParams& prior, Rng& rng);

/// Same, with an already built proposal (ignored for DA).
ChainPath run_chain(const KernelSpec& kernel, double theta0, std::size_t m,
                    const Dataset& ds, const PriorParams& prior,
                    const Proposal* proposal, Rng& rng);

/// sup over an even grid on [lo, hi] of target density / proposal density,
/// both normalized by quadrature on that grid.
double ratio_bound(const LogTarget& log_target, const LogTarget& log_proposal,
                   std::size_t grid, double lo = 0.0, double hi = 1.0);

double ratio_bound_diagnostic(const Dataset& ds, const PriorParams& prior,
                              const Proposal& proposal, std::size_t grid = 8193);

/// CSV `iter,theta`.
void write_chain_csv(std::ostream& out, const ChainPath& path);
/// CSV `iter,scaled` with scaled = sqrt(n) (theta(i) - theta_bayes).
void write_scaled_csv(std::ostream& out, const ChainPath& path, double theta_bayes);

}  // namespace mixchain
