#include "mixchain/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "mixchain/errors.hpp"

namespace mixchain {

std::vector<double> gregory_weights(std::size_t points, double step) {
  if (points < 2) throw DomainError("quadrature needs at least two nodes");
  std::vector<double> w(points, step);
  if (points < 6) {
    w.front() = w.back() = 0.5 * step;
    return w;
  }
  constexpr double end[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
  for (std::size_t k = 0; k < 3; ++k) {
    w[k] = end[k] * step;
    w[points - 1 - k] = end[k] * step;
  }
  return w;
}

Bulk locate_bulk(const LogDensityFn& log_f, double lo, double hi, double drop) {
  constexpr double kInvPhi = 0.61803398874989484820;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = log_f(c), fd = log_f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = log_f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = log_f(d);
    }
  }
  Bulk bulk{lo, hi, 0.5 * (a + b), 0.0};
  bulk.log_max = log_f(bulk.mode);
  // Endpoints can beat the interior search when the maximum sits on them.
  for (double edge : {lo, hi}) {
    const double fe = log_f(edge);
    if (fe > bulk.log_max) {
      bulk.log_max = fe;
      bulk.mode = edge;
    }
  }
  if (!std::isfinite(bulk.log_max)) {
    throw NumericalFailure("log-density has no finite maximum on the interval");
  }
  const double level = bulk.log_max - drop;
  auto boundary = [&](double inside, double outside) {
    if (log_f(outside) >= level) return outside;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (log_f(mid) >= level ? inside : outside) = mid;
    }
    return outside;
  };
  bulk.lo = boundary(bulk.mode, lo);
  bulk.hi = boundary(bulk.mode, hi);
  return bulk;
}

std::vector<double> Tabulated::masses() const {
  std::vector<double> m(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    m[k] = weights[k] * std::exp(log_f[k] - log_normalizer);
  }
  return m;
}

std::vector<double> Tabulated::densities() const {
  std::vector<double> d(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) d[k] = std::exp(log_f[k] - log_normalizer);
  return d;
}

Tabulated tabulate(const LogDensityFn& log_f, double lo, double hi,
                   std::size_t points) {
  if (!(hi > lo)) throw DomainError("quadrature interval is empty");
  if (points < 2) throw DomainError("quadrature needs at least two nodes");
  Tabulated t;
  const double step = (hi - lo) / static_cast<double>(points - 1);
  t.x.resize(points);
  t.log_f.resize(points);
  double peak = -INFINITY;
  for (std::size_t k = 0; k < points; ++k) {
    t.x[k] = k + 1 == points ? hi : lo + step * static_cast<double>(k);
    t.log_f[k] = log_f(t.x[k]);
    if (std::isnan(t.log_f[k]) || t.log_f[k] == INFINITY) {
      throw NumericalFailure("log-density is not finite at a quadrature node");
    }
    peak = std::max(peak, t.log_f[k]);
  }
  if (!std::isfinite(peak)) throw NumericalFailure("log-density vanishes on the grid");
  t.weights = gregory_weights(points, step);
  double sum = 0.0;
  for (std::size_t k = 0; k < points; ++k) sum += t.weights[k] * std::exp(t.log_f[k] - peak);
  t.log_normalizer = peak + std::log(sum);
  return t;
}

PiecewiseLinearDensity::PiecewiseLinearDensity(std::vector<double> nodes,
                                               std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.size() < 2 || nodes_.size() != values_.size()) {
    throw DomainError("piecewise-linear density needs >= 2 matching nodes");
  }
  cumulative_.assign(nodes_.size(), 0.0);
  double total = 0.0, first_moment = 0.0;
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    const double h = nodes_[k + 1] - nodes_[k];
    const double d0 = values_[k], d1 = values_[k + 1];
    if (!(h > 0.0)) throw DomainError("piecewise-linear nodes must increase");
    if (!(d0 >= 0.0 && d1 >= 0.0) || !std::isfinite(d0) || !std::isfinite(d1)) {
      throw DomainError("piecewise-linear density values must be finite and >= 0");
    }
    total += 0.5 * h * (d0 + d1);
    first_moment += nodes_[k] * 0.5 * h * (d0 + d1) + h * h * (d0 + 2.0 * d1) / 6.0;
    cumulative_[k + 1] = total;
  }
  if (!(total > 0.0)) throw DomainError("piecewise-linear density has zero mass");
  for (auto& v : values_) v /= total;
  for (auto& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
  mean_ = first_moment / total;
}

double PiecewiseLinearDensity::quantile(double u) const {
  const double target = std::clamp(u, 0.0, 1.0);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t k = it == cumulative_.begin()
                      ? 0
                      : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  if (k + 1 >= nodes_.size()) k = nodes_.size() - 2;
  const double h = nodes_[k + 1] - nodes_[k];
  const double d0 = values_[k], d1 = values_[k + 1];
  const double r = target - cumulative_[k];
  const double a = 0.5 * (d1 - d0) / h;
  double t;
  if (std::abs(a) * h < 1e-12 * (d0 + d1)) {
    t = d0 > 0.0 ? r / d0 : 0.0;
  } else {
    const double disc = std::max(d0 * d0 + 4.0 * a * r, 0.0);
    const double denom = d0 + std::sqrt(disc);
    t = denom > 0.0 ? 2.0 * r / denom : h;
  }
  return nodes_[k] + std::clamp(t, 0.0, h);
}

double PiecewiseLinearDensity::density(double x) const {
  if (x < nodes_.front() || x > nodes_.back()) return 0.0;
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  std::size_t k = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
  if (k + 1 >= nodes_.size()) return values_.back();
  const double t = (x - nodes_[k]) / (nodes_[k + 1] - nodes_[k]);
  return values_[k] + t * (values_[k + 1] - values_[k]);
}

double PiecewiseLinearDensity::log_density(double x) const {
  return std::log(density(x));
}

double PiecewiseLinearDensity::cdf(double x) const {
  if (x <= nodes_.front()) return 0.0;
  if (x >= nodes_.back()) return 1.0;
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double t = x - nodes_[k];
  const double h = nodes_[k + 1] - nodes_[k];
  const double d0 = values_[k], d1 = values_[k + 1];
  return cumulative_[k] + d0 * t + 0.5 * (d1 - d0) * t * t / h;
}

}  // namespace mixchain
