#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mixchain {

/// Discrete probability measure on a strictly increasing real grid.
class GridMeasure {
 public:
  /// Validates: finite strictly increasing support, nonnegative weights
  /// summing to 1 within 1e-10. Throws DomainError otherwise.
  GridMeasure(std::vector<double> support, std::vector<double> weights);

  static GridMeasure point_mass(double x);

  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return support_.size(); }
  double mean() const noexcept;

 private:
  std::vector<double> support_;
  std::vector<double> weights_;
};

enum class RangePolicy { UnionSupport, Fixed };

struct MetricConfig {
  double cap = 1.0;
  std::size_t grid_size = 512;
  RangePolicy range = RangePolicy::UnionSupport;
  double lo = 0.0;
  double hi = 1.0;

  void validate() const;
  static MetricConfig fixed(double lo, double hi, std::size_t grid_size = 512);
};

/// Histogram of the samples on grid_size equal bins; the support is the set
/// of centers of nonempty bins. Under a fixed range, samples outside
/// [lo, hi] are counted in the edge bins.
GridMeasure bin_samples(std::span<const double> samples, const MetricConfig& cfg);

/// Same, with nonnegative per-sample weights (normalized internally).
GridMeasure bin_weighted(std::span<const double> values,
                         std::span<const double> weights,
                         const MetricConfig& cfg);

/// Moves every atom of mu to the center of its bin.
GridMeasure rebin(const GridMeasure& mu, const MetricConfig& cfg);

/// Bounded-Lipschitz distance
///
///   sup { |mu(psi) - nu(psi)| : |psi| <= 1, |psi(a)-psi(b)| <= min(|a-b|, cap) }
///
/// evaluated exactly on the merged support. Result lies in [0, 2].
double bl_distance(const GridMeasure& mu, const GridMeasure& nu,
                   const MetricConfig& cfg = {});

struct TvW1 {
  double tv;
  double w1;
};

/// Total variation and (uncapped) Wasserstein-1 on the merged support.
TvW1 tv_w1(const GridMeasure& mu, const GridMeasure& nu);

/// CSV with header `support,weight`.
void write_measure_csv(std::ostream& out, const GridMeasure& mu);

}  // namespace mixchain
