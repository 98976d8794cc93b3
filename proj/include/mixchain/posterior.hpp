#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mixchain/metrics.hpp"
#include "mixchain/model.hpp"
#include "mixchain/quadrature.hpp"

namespace mixchain {

/// sum_i log(1 + theta (s_i - 1)), the log likelihood ratio of the mixture
/// at theta against F_0. Products are accumulated in short blocks so only
/// one logarithm is taken per block.
double log_likelihood_ratio(std::span<const double> ratio, double theta);

enum class PosteriorScale { Theta, H };

/// Quadrature representation of the exact posterior. On the h-scale the
/// support is h = lambda_n theta.
struct PosteriorGrid {
  PosteriorScale scale = PosteriorScale::H;
  GridMeasure measure;
  std::vector<double> density;  // normalized density at the support points
  double log_normalizer = 0.0;  // log of the marginal likelihood ratio
  double mean = 0.0;
  double lambda = 1.0;

  PosteriorGrid to_theta() const;
  PosteriorGrid to_h() const;
  /// Linear interpolant of the density, for inverse-CDF draws.
  PiecewiseLinearDensity interpolant() const;
};

/// Exact posterior of theta by quadrature on an adaptive h-grid of `points`
/// nodes (>= 64). Requires alpha1 >= 1 and alpha0 >= 1 so the density is
/// bounded. The mean is the L2 Bayes estimator (on the returned h-scale;
/// use to_theta() for theta).
PosteriorGrid posterior_grid(const Dataset& ds, const PriorParams& prior,
                             std::size_t points = 2048);

/// p*(dh|d) proportional to exp(h d - h^2 I / 2) h^{alpha1 - 1} on h >= 0.
struct LimitPosterior {
  double d = 0.0;
  double fisher = 1.0;
  double alpha1 = 1.0;
  GridMeasure measure;
  std::vector<double> density;
  double log_normalizer = 0.0;
  double mean = 0.0;

  double log_density(double h) const;
  PiecewiseLinearDensity interpolant() const;
};

LimitPosterior limit_posterior(double d, double fisher, double alpha1,
                               std::size_t points = 2048);

/// max over an even h-grid on [0, H] of |log L_{n,h} - h Z_n + h^2 I / 2|.
/// `grid` = 1 evaluates h = 0 only.
double lan_residual(const Dataset& ds, const MixtureFamily& family, double H,
                    std::size_t grid = 301);

struct BvmResult {
  double tv;
  double tail;
};

/// Total variation between the scaled posterior and p*(.|d = Z_n), and the
/// scaled posterior mass above `tail_threshold`.
BvmResult bvm_distance(const Dataset& ds, const MixtureFamily& family,
                       const PriorParams& prior, double tail_threshold = 10.0,
                       std::size_t points = 4096);

/// CSV with header `h,density,cdf` (theta-scale grids are written as is).
void write_posterior_csv(std::ostream& out, const PosteriorGrid& post);

}  // namespace mixchain
