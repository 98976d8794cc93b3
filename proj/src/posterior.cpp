#include "mixchain/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"

namespace mixchain {
namespace {

constexpr double kBulkDrop = 36.0;
constexpr double kTailTolerance = 1e-12;
constexpr std::size_t kBlock = 16;

void check_quadrature_prior(const PriorParams& prior) {
  prior.validate();
  if (prior.alpha1 < 1.0 || prior.alpha0 < 1.0) {
    throw DomainError("posterior quadrature needs alpha1 >= 1 and alpha0 >= 1");
  }
}

GridMeasure measure_from(const Tabulated& t) {
  std::vector<double> masses = t.masses();
  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  for (auto& m : masses) m /= total;
  return GridMeasure(t.x, std::move(masses));
}

/// Extends [bulk.hi] until the log-concave tail bound f(b) / |(log f)'(b)|
/// falls below the tolerance, relative to the bulk peak.
double secure_upper_limit(const LogDensityFn& log_f, const Bulk& bulk,
                          double ceiling) {
  double b = bulk.hi;
  for (int it = 0; it < 60 && b < ceiling; ++it) {
    const double step = 1e-6 * (1.0 + b);
    const double slope = (log_f(b + step) - log_f(b)) / step;
    const double width = std::max(b - bulk.lo, 1e-300);
    const double bound = slope < 0.0
                             ? std::exp(log_f(b) - bulk.log_max) / (-slope) / width
                             : INFINITY;
    if (bound < kTailTolerance) break;
    b = std::min(ceiling, b + (b - bulk.mode + 1.0));
  }
  return std::min(b, ceiling);
}

}  // namespace

double log_likelihood_ratio(std::span<const double> ratio, double theta) {
  double acc = 0.0;
  std::size_t i = 0;
  const std::size_t n = ratio.size();
  for (; i + kBlock <= n; i += kBlock) {
    double p = 1.0;
    for (std::size_t j = 0; j < kBlock; ++j) p *= 1.0 + theta * (ratio[i + j] - 1.0);
    if (p > 1e-290 && p < 1e290) {
      acc += std::log(p);
    } else {
      for (std::size_t j = 0; j < kBlock; ++j) acc += std::log1p(theta * (ratio[i + j] - 1.0));
    }
  }
  for (; i < n; ++i) acc += std::log1p(theta * (ratio[i] - 1.0));
  return acc;
}

PosteriorGrid PosteriorGrid::to_theta() const {
  if (scale == PosteriorScale::Theta) return *this;
  std::vector<double> support(measure.support().begin(), measure.support().end());
  for (auto& s : support) s /= lambda;
  std::vector<double> weights(measure.weights().begin(), measure.weights().end());
  PosteriorGrid out{PosteriorScale::Theta,
                    GridMeasure(std::move(support), std::move(weights)),
                    density,
                    log_normalizer,
                    mean / lambda,
                    lambda};
  for (auto& d : out.density) d *= lambda;
  return out;
}

PosteriorGrid PosteriorGrid::to_h() const {
  if (scale == PosteriorScale::H) return *this;
  std::vector<double> support(measure.support().begin(), measure.support().end());
  for (auto& s : support) s *= lambda;
  std::vector<double> weights(measure.weights().begin(), measure.weights().end());
  PosteriorGrid out{PosteriorScale::H,
                    GridMeasure(std::move(support), std::move(weights)),
                    density,
                    log_normalizer,
                    mean * lambda,
                    lambda};
  for (auto& d : out.density) d /= lambda;
  return out;
}

PiecewiseLinearDensity PosteriorGrid::interpolant() const {
  return PiecewiseLinearDensity(
      std::vector<double>(measure.support().begin(), measure.support().end()), density);
}

PosteriorGrid posterior_grid(const Dataset& ds, const PriorParams& prior,
                             std::size_t points) {
  check_quadrature_prior(prior);
  if (points < 64) throw DomainError("posterior_grid needs at least 64 points");
  for (double s : ds.ratio()) {
    if (!(s > 0.0 && std::isfinite(s))) {
      throw CorruptDataset("dataset holds a nonpositive likelihood ratio");
    }
  }
  const double lambda = ds.lambda();
  const auto ratio = ds.ratio();
  const LogDensityFn log_f = [&](double h) {
    const double theta = std::min(h / lambda, 1.0);
    return log_likelihood_ratio(ratio, theta) + prior.log_density(theta) -
           std::log(lambda);
  };
  const Bulk bulk = locate_bulk(log_f, 0.0, lambda, kBulkDrop);
  const double hi = secure_upper_limit(log_f, bulk, lambda);
  const Tabulated t = tabulate(log_f, bulk.lo, hi, points);
  PosteriorGrid post{PosteriorScale::H, measure_from(t), t.densities(),
                     t.log_normalizer, 0.0, lambda};
  post.mean = post.measure.mean();
  return post;
}

double LimitPosterior::log_density(double h) const {
  if (h < 0.0) return -INFINITY;
  double v = h * d - 0.5 * h * h * fisher;
  if (alpha1 != 1.0) v += (alpha1 - 1.0) * std::log(h);
  return v - log_normalizer;
}

PiecewiseLinearDensity LimitPosterior::interpolant() const {
  return PiecewiseLinearDensity(
      std::vector<double>(measure.support().begin(), measure.support().end()), density);
}

LimitPosterior limit_posterior(double d, double fisher, double alpha1,
                               std::size_t points) {
  if (!(fisher > 0.0)) throw DomainError("limit_posterior: I must be positive");
  if (!(alpha1 > 0.0)) throw DomainError("limit_posterior: alpha1 must be positive");
  if (alpha1 < 1.0) {
    throw DomainError("limit_posterior quadrature needs alpha1 >= 1");
  }
  if (points < 64) throw DomainError("limit_posterior needs at least 64 points");
  if (!std::isfinite(d)) throw DomainError("limit_posterior: d must be finite");
  const LogDensityFn log_f = [=](double h) {
    double v = h * d - 0.5 * h * h * fisher;
    if (alpha1 != 1.0) v += (alpha1 - 1.0) * std::log(h);
    return v;
  };
  const double mode = (d + std::sqrt(d * d + 4.0 * fisher * (alpha1 - 1.0))) / (2.0 * fisher);
  double ceiling = mode + 1.0;
  while (log_f(ceiling) > log_f(mode) - kBulkDrop - 8.0) ceiling += (ceiling - mode) + 1.0;
  const Bulk bulk = locate_bulk(log_f, 0.0, ceiling, kBulkDrop);
  const double hi = secure_upper_limit(log_f, bulk, ceiling);
  const Tabulated t = tabulate(log_f, bulk.lo, hi, points);
  LimitPosterior lp{d, fisher, alpha1, measure_from(t), t.densities(), t.log_normalizer, 0.0};
  lp.mean = lp.measure.mean();
  return lp;
}

double lan_residual(const Dataset& ds, const MixtureFamily& family, double H,
                    std::size_t grid) {
  if (!(H > 0.0)) throw DomainError("lan_residual: H must be positive");
  if (!(H / ds.lambda() < 1.0)) {
    throw DomainError("lan_residual: H / lambda_n must stay below 1");
  }
  if (grid == 0) throw DomainError("lan_residual: grid must be positive");
  const double z = ds.z();
  const double fisher = family.fisher();
  double worst = 0.0;
  for (std::size_t k = 0; k < grid; ++k) {
    const double h = grid == 1 ? 0.0 : H * static_cast<double>(k) / static_cast<double>(grid - 1);
    const double log_l = log_likelihood_ratio(ds.ratio(), h / ds.lambda());
    worst = std::max(worst, std::abs(log_l - h * z + 0.5 * h * h * fisher));
  }
  return worst;
}

BvmResult bvm_distance(const Dataset& ds, const MixtureFamily& family,
                       const PriorParams& prior, double tail_threshold,
                       std::size_t points) {
  const PosteriorGrid post = posterior_grid(ds, prior, points);
  const LimitPosterior limit = limit_posterior(ds.z(), family.fisher(), prior.alpha1, points);

  const double lambda = ds.lambda();
  const auto ratio = ds.ratio();
  const LogDensityFn post_log = [&](double h) {
    if (h > lambda) return -std::numeric_limits<double>::infinity();
    const double theta = h / lambda;
    return log_likelihood_ratio(ratio, theta) + prior.log_density(theta);
  };
  const LogDensityFn limit_log = [&](double h) { return limit.log_density(h); };

  const double upper = std::max(post.measure.support().back(), limit.measure.support().back());
  const Tabulated a = tabulate(post_log, 0.0, upper, points);
  const Tabulated b = tabulate(limit_log, 0.0, upper, points);
  const auto pa = a.densities();
  const auto pb = b.densities();
  double tv = 0.0;
  for (std::size_t k = 0; k < points; ++k) tv += a.weights[k] * std::abs(pa[k] - pb[k]);
  tv = std::clamp(0.5 * tv, 0.0, 1.0);

  const double tail = 1.0 - post.interpolant().cdf(tail_threshold);
  return {tv, std::clamp(tail, 0.0, 1.0)};
}

void write_posterior_csv(std::ostream& out, const PosteriorGrid& post) {
  out << (post.scale == PosteriorScale::H ? "h" : "theta") << ",density,cdf\n";
  const auto pl = post.interpolant();
  const auto x = post.measure.support();
  for (std::size_t k = 0; k < x.size(); ++k) {
    out << format_double(x[k]) << ',' << format_double(post.density[k]) << ','
        << format_double(pl.cdf(x[k])) << '\n';
  }
}

}  // namespace mixchain
