#pragma once
// Reference computations used only by the tests. None of them shares code
// with the library paths they check.

#include <cstddef>
#include <functional>
#include <vector>

#include "mixchain/model.hpp"

namespace oracle {

/// Ground metric min(|a - b|, cap, 2): the bounded-Lipschitz dual with
/// |psi| <= 1 never sees differences above 2.
double capped(double a, double b, double cap);

/// Optimal transport cost between mu and nu on a common support, by
/// enumerating every basic solution (spanning tree of the supply/demand
/// graph) of the transportation polytope. Exponential; meant for <= 8 atoms.
double transport_by_vertices(const std::vector<double>& support, const std::vector<double>& mu,
                             const std::vector<double>& nu, double cap);

/// Dense two-phase simplex (Bland's rule) for min c.x, A x = b, x >= 0.
/// Returns the optimum; throws std::runtime_error if infeasible.
double simplex_min(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                   const std::vector<double>& c);

/// Capped W1 between measures on arbitrary supports via simplex_min.
double transport_by_simplex(const std::vector<double>& xs, const std::vector<double>& mu,
                            const std::vector<double>& ys, const std::vector<double>& nu,
                            double cap);

/// Asymptotic Kolmogorov p-value with Stephens' small-sample correction.
double ks_pvalue(double d, std::size_t n);
/// sup |F_n - F| for the given samples (sorted in place).
double ks_statistic(std::vector<double>& samples, const std::function<double(double)>& cdf);

double chi_square_pvalue(double statistic, double dof);

/// Posterior mean of theta by a midpoint rule on [0, 1] with plain
/// per-observation logarithms.
double riemann_posterior_mean(const std::vector<double>& x, const mixchain::MixtureFamily& family,
                              const mixchain::PriorParams& prior, std::size_t points);

/// Law of the number of heads, by listing all 2^k outcomes.
std::vector<double> poisson_binomial_by_enumeration(const std::vector<double>& p);

/// Stationary vector of a finite row-stochastic matrix (power iteration).
std::vector<double> stationary_vector(const std::vector<std::vector<double>>& p);

/// Standard normal cdf via std::erfc.
double normal_cdf(double x);

}  // namespace oracle
