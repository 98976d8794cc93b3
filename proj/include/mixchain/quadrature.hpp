#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mixchain/rng.hpp"

namespace mixchain {

using LogDensityFn = std::function<double(double)>;

/// Weights of the trapezoid rule with third-order Gregory end corrections
/// on `points` equally spaced nodes with spacing `step`. Falls back to the
/// plain trapezoid rule below 6 nodes. All weights are positive.
std::vector<double> gregory_weights(std::size_t points, double step);

/// Region of a unimodal log-density where it stays within `drop` of its
/// maximum, together with the maximizer.
struct Bulk {
  double lo;
  double hi;
  double mode;
  double log_max;
};

/// Golden-section search for the mode on [lo, hi], then bisection for the
/// level log_max - drop on each side. Assumes log_f is unimodal there.
Bulk locate_bulk(const LogDensityFn& log_f, double lo, double hi, double drop);

/// Unnormalized log-density tabulated on a uniform grid with quadrature
/// weights. log_normalizer = log of the integral of exp(log_f).
struct Tabulated {
  std::vector<double> x;
  std::vector<double> log_f;
  std::vector<double> weights;
  double log_normalizer = 0.0;

  /// Quadrature masses weights_k exp(log_f_k) / normalizer (sum to 1).
  std::vector<double> masses() const;
  /// Normalized density values at the nodes.
  std::vector<double> densities() const;
};

Tabulated tabulate(const LogDensityFn& log_f, double lo, double hi,
                   std::size_t points);

/// Density that is linear between nodes, normalized by its exact integral.
/// Supports exact inverse-CDF sampling and exact log-density evaluation, so
/// a Metropolis-Hastings proposal built from it has no approximation error.
class PiecewiseLinearDensity {
 public:
  PiecewiseLinearDensity() = default;
  /// values must be nonnegative with positive total; nodes increasing.
  PiecewiseLinearDensity(std::vector<double> nodes, std::vector<double> values);

  double sample(Rng& rng) const { return quantile(rng.uniform()); }
  double quantile(double u) const;
  double cdf(double x) const;
  double density(double x) const;
  double log_density(double x) const;
  double mean() const noexcept { return mean_; }
  double lo() const noexcept { return nodes_.front(); }
  double hi() const noexcept { return nodes_.back(); }
  std::span<const double> nodes() const noexcept { return nodes_; }
  /// Normalized density at the nodes.
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // normalized CDF at nodes
  double mean_ = 0.0;
};

}  // namespace mixchain
