#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "mixchain/metrics.hpp"
#include "mixchain/rng.hpp"

namespace mixchain {

/// Limit diffusion dX = b(X, z) dt + sqrt(c(X, z)) dW with
/// b(h, z) = alpha1 + h z - h^2 I and c(h, z) = 2h.
struct DiffusionSpec {
  double z = 0.0;
  double alpha1 = 1.0;
  double fisher = 1.0;

  void validate() const;
};

struct SdeCoefficients {
  double drift;
  double variance;
};

SdeCoefficients sde_coefficients(double h, const DiffusionSpec& spec);

/// Path observed on a regular time grid: values[k] holds X(k * dt_out) and
/// is taken as constant on [k dt_out, (k+1) dt_out).
struct SampledPath {
  double dt_out = 0.0;
  std::vector<double> values;

  double horizon() const noexcept { return dt_out * static_cast<double>(values.size()); }
  double time_average() const;
};

struct SdeInit {
  enum class Kind { Fixed, LimitPosteriorDraw };
  Kind kind = Kind::LimitPosteriorDraw;
  double h0 = 0.0;

  static SdeInit fixed(double h0) { return {Kind::Fixed, h0}; }
  static SdeInit stationary() { return {Kind::LimitPosteriorDraw, 0.0}; }
};

/// Full-truncation Euler scheme
///   h_{k+1} = h_k + b(h_k^+, z) dt + sqrt(2 h_k^+) sqrt(dt) xi_k,
/// reported clamped at 0 and recorded every `stride` steps.
SampledPath simulate_sde(const DiffusionSpec& spec, const SdeInit& init, double horizon,
                         double dt, Rng& rng, std::size_t stride = 1);

/// Pure-jump process: values[k] on [times[k], times[k+1]) with
/// times.back() the end of the last sojourn.
struct StepProcessPath {
  std::vector<double> times;   // size values.size() + 1, times[0] = 0
  std::vector<double> values;

  double horizon() const noexcept { return times.empty() ? 0.0 : times.back(); }
};

enum class ClockKind { Poisson, Deterministic };

/// Embeds a discrete chain in continuous time with state scaling lambda:
/// Poisson clock (exponential(rate) sojourns) or deterministic clock
/// theta([rate t]).
StepProcessPath poisson_embed(std::span<const double> chain, double rate, double lambda,
                              Rng& rng, ClockKind clock = ClockKind::Poisson);

/// Time-weighted histogram of the path over [0, horizon].
GridMeasure occupation_measure(const StepProcessPath& path, double horizon,
                               const MetricConfig& cfg);
GridMeasure occupation_measure(const SampledPath& path, double horizon,
                               const MetricConfig& cfg);

/// CSV `t,h`.
void write_path_csv(std::ostream& out, const SampledPath& path);

}  // namespace mixchain
