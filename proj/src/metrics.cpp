#include "mixchain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"

namespace mixchain {
namespace {

constexpr double kMassTolerance = 1e-10;

struct Merged {
  std::vector<double> x;
  std::vector<double> diff;  // mu - nu per merged atom
};

Merged merge(const GridMeasure& mu, const GridMeasure& nu) {
  Merged m;
  const auto xs = mu.support(), ys = nu.support();
  const auto ws = mu.weights(), vs = nu.weights();
  m.x.reserve(xs.size() + ys.size());
  m.diff.reserve(xs.size() + ys.size());
  std::size_t i = 0, j = 0;
  while (i < xs.size() || j < ys.size()) {
    if (j == ys.size() || (i < xs.size() && xs[i] < ys[j])) {
      m.x.push_back(xs[i]);
      m.diff.push_back(ws[i++]);
    } else if (i == xs.size() || ys[j] < xs[i]) {
      m.x.push_back(ys[j]);
      m.diff.push_back(-vs[j++]);
    } else {
      m.x.push_back(xs[i]);
      m.diff.push_back(ws[i++] - vs[j++]);
    }
  }
  return m;
}

/// Concave piecewise-linear function on [lo, hi]: value at lo followed by
/// consecutive (length, slope) pieces with nonincreasing slopes.
class ConcavePiecewise {
 public:
  ConcavePiecewise(double lo, double hi) : lo_(lo) {
    pieces_.push_back({hi - lo, 0.0});
  }

  void add_linear(double w) {
    start_ += w * lo_;
    for (auto& p : pieces_) p.slope += w;
  }

  /// f <- (v -> max { f(u) : |u - v| <= delta }) restricted to [lo, hi].
  void sliding_max(double delta) {
    if (delta <= 0.0) return;
    std::vector<Piece> next;
    next.reserve(pieces_.size() + 1);
    double flat = 2.0 * delta;
    for (const auto& p : pieces_) {
      if (p.slope > 0.0) next.push_back(p);
    }
    for (const auto& p : pieces_) {
      if (p.slope == 0.0) flat += p.length;
    }
    next.push_back({flat, 0.0});
    for (const auto& p : pieces_) {
      if (p.slope < 0.0) next.push_back(p);
    }
    // The widened function lives on [lo - delta, hi + delta] and takes the
    // old value f(lo) at its left end; trim delta from each side.
    std::size_t first = 0;
    double remaining = delta;
    while (remaining > 0.0 && first < next.size()) {
      Piece& p = next[first];
      if (p.length <= remaining) {
        start_ += p.length * p.slope;
        remaining -= p.length;
        ++first;
      } else {
        start_ += remaining * p.slope;
        p.length -= remaining;
        remaining = 0.0;
      }
    }
    std::size_t last = next.size();
    remaining = delta;
    while (remaining > 0.0 && last > first) {
      Piece& p = next[last - 1];
      if (p.length <= remaining) {
        remaining -= p.length;
        --last;
      } else {
        p.length -= remaining;
        remaining = 0.0;
      }
    }
    pieces_.assign(next.begin() + static_cast<std::ptrdiff_t>(first),
                   next.begin() + static_cast<std::ptrdiff_t>(last));
    if (pieces_.empty()) pieces_.push_back({0.0, 0.0});
  }

  double maximum() const {
    double v = start_;
    double best = v;
    for (const auto& p : pieces_) {
      v += p.length * p.slope;
      best = std::max(best, v);
    }
    return best;
  }

 private:
  struct Piece {
    double length;
    double slope;
  };

  double lo_;
  double start_ = 0.0;
  std::vector<Piece> pieces_;
};

std::pair<double, double> sample_range(std::span<const double> values,
                                       const MetricConfig& cfg) {
  if (cfg.range == RangePolicy::Fixed) return {cfg.lo, cfg.hi};
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  return {*mn, *mx};
}

}  // namespace

GridMeasure::GridMeasure(std::vector<double> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty() || support_.size() != weights_.size()) {
    throw DomainError("grid measure needs matching, nonempty support and weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!std::isfinite(support_[i])) throw DomainError("grid support must be finite");
    if (i > 0 && !(support_[i] > support_[i - 1])) {
      throw DomainError("grid support must be strictly increasing");
    }
    if (!(weights_[i] >= 0.0)) throw DomainError("grid weights must be nonnegative");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw DomainError("grid measure is not normalized (total mass " +
                      format_double(total) + ")");
  }
}

GridMeasure GridMeasure::point_mass(double x) { return GridMeasure({x}, {1.0}); }

double GridMeasure::mean() const noexcept {
  return std::inner_product(support_.begin(), support_.end(), weights_.begin(), 0.0);
}

void MetricConfig::validate() const {
  if (!(cap > 0.0)) throw DomainError("metric cap must be positive");
  if (grid_size < 2) throw DomainError("metric grid_size must be at least 2");
  if (range == RangePolicy::Fixed && !(hi > lo)) {
    throw DomainError("fixed metric range needs lo < hi");
  }
}

MetricConfig MetricConfig::fixed(double lo, double hi, std::size_t grid_size) {
  MetricConfig cfg;
  cfg.range = RangePolicy::Fixed;
  cfg.lo = lo;
  cfg.hi = hi;
  cfg.grid_size = grid_size;
  return cfg;
}

GridMeasure bin_weighted(std::span<const double> values,
                         std::span<const double> weights,
                         const MetricConfig& cfg) {
  cfg.validate();
  if (values.empty()) throw DomainError("cannot bin an empty sample");
  if (values.size() != weights.size()) {
    throw DomainError("values and weights differ in length");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("cannot bin non-finite samples");
  }
  const auto [lo, hi] = sample_range(values, cfg);
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("sample weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("sample weights sum to zero");
  if (hi == lo) return GridMeasure::point_mass(lo);

  const std::size_t bins = cfg.grid_size;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> mass(bins, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double pos = std::floor((values[i] - lo) / width);
    const auto k = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    mass[k] += weights[i];
  }
  std::vector<double> support, w;
  for (std::size_t k = 0; k < bins; ++k) {
    if (mass[k] > 0.0) {
      support.push_back(lo + (static_cast<double>(k) + 0.5) * width);
      w.push_back(mass[k] / total);
    }
  }
  // Renormalize once more so rounding in the division cannot leak mass.
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= s;
  return GridMeasure(std::move(support), std::move(w));
}

GridMeasure bin_samples(std::span<const double> samples, const MetricConfig& cfg) {
  if (samples.empty()) throw DomainError("cannot bin an empty sample");
  const std::vector<double> ones(samples.size(), 1.0);
  return bin_weighted(samples, ones, cfg);
}

GridMeasure rebin(const GridMeasure& mu, const MetricConfig& cfg) {
  return bin_weighted(mu.support(), mu.weights(), cfg);
}

double bl_distance(const GridMeasure& mu, const GridMeasure& nu,
                   const MetricConfig& cfg) {
  cfg.validate();
  const Merged m = merge(mu, nu);
  // With |psi| <= 1 the oscillation of psi never exceeds 2, so the pairwise
  // cap constraints reduce to osc(psi) <= c, c = min(cap, 2). The objective
  // is shift invariant (both measures have mass 1), hence psi may be taken
  // in the window [-c/2, c/2] subject only to the adjacent-pair constraints
  // |psi_{i+1} - psi_i| <= x_{i+1} - x_i. That chain LP is solved exactly by
  // dynamic programming over concave piecewise-linear value functions.
  const double c = std::min(cfg.cap, 2.0);
  ConcavePiecewise value(-0.5 * c, 0.5 * c);
  value.add_linear(m.diff[0]);
  for (std::size_t i = 1; i < m.x.size(); ++i) {
    value.sliding_max(m.x[i] - m.x[i - 1]);
    value.add_linear(m.diff[i]);
  }
  return std::clamp(value.maximum(), 0.0, 2.0);
}

TvW1 tv_w1(const GridMeasure& mu, const GridMeasure& nu) {
  const Merged m = merge(mu, nu);
  double tv = 0.0, w1 = 0.0, cdf = 0.0;
  for (std::size_t i = 0; i < m.x.size(); ++i) {
    tv += std::abs(m.diff[i]);
    cdf += m.diff[i];
    if (i + 1 < m.x.size()) w1 += std::abs(cdf) * (m.x[i + 1] - m.x[i]);
  }
  return {std::min(0.5 * tv, 1.0), w1};
}

void write_measure_csv(std::ostream& out, const GridMeasure& mu) {
  out << "support,weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out << format_double(mu.support()[i]) << ',' << format_double(mu.weights()[i])
        << '\n';
  }
}

}  // namespace mixchain
