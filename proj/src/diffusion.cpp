#include "mixchain/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"
#include "mixchain/posterior.hpp"

namespace mixchain {

void DiffusionSpec::validate() const {
  if (!(alpha1 > 0.0)) throw DomainError("diffusion: alpha1 must be positive");
  if (!(fisher > 0.0)) throw DomainError("diffusion: I must be positive");
  if (!std::isfinite(z)) throw DomainError("diffusion: z must be finite");
}

SdeCoefficients sde_coefficients(double h, const DiffusionSpec& spec) {
  if (!(h >= 0.0)) throw DomainError("sde_coefficients: h must be >= 0");
  return {spec.alpha1 + h * spec.z - h * h * spec.fisher, 2.0 * h};
}

double SampledPath::time_average() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

SampledPath simulate_sde(const DiffusionSpec& spec, const SdeInit& init, double horizon,
                         double dt, Rng& rng, std::size_t stride) {
  spec.validate();
  if (!(dt > 0.0)) throw DomainError("simulate_sde: dt must be positive");
  if (dt > 0.01) throw DomainError("simulate_sde: dt must not exceed 0.01");
  if (!(horizon > 0.0)) throw DomainError("simulate_sde: T must be positive");
  if (stride == 0) throw DomainError("simulate_sde: stride must be positive");

  double h;
  if (init.kind == SdeInit::Kind::Fixed) {
    if (!(init.h0 >= 0.0)) throw DomainError("simulate_sde: h0 must be >= 0");
    h = init.h0;
  } else {
    h = limit_posterior(spec.z, spec.fisher, spec.alpha1).interpolant().sample(rng);
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  SampledPath path;
  path.dt_out = dt * static_cast<double>(stride);
  path.values.reserve(steps / stride + 1);
  const double root_dt = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) {
    if (k % stride == 0) path.values.push_back(std::max(h, 0.0));
    const double hp = std::max(h, 0.0);
    const double drift = spec.alpha1 + hp * spec.z - hp * hp * spec.fisher;
    h += drift * dt + std::sqrt(2.0 * hp) * root_dt * rng.normal();
  }
  return path;
}

StepProcessPath poisson_embed(std::span<const double> chain, double rate, double lambda,
                              Rng& rng, ClockKind clock) {
  if (chain.empty()) throw DomainError("poisson_embed: chain is empty");
  if (!(rate > 0.0)) throw DomainError("poisson_embed: rate must be positive");
  StepProcessPath path;
  path.values.reserve(chain.size());
  path.times.reserve(chain.size() + 1);
  path.times.push_back(0.0);
  double t = 0.0;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    path.values.push_back(lambda * chain[k]);
    if (clock == ClockKind::Poisson) {
      t += rng.exponential(rate);
    } else {
      t = static_cast<double>(k + 1) / rate;
    }
    path.times.push_back(t);
  }
  return path;
}

GridMeasure occupation_measure(const StepProcessPath& path, double horizon,
                               const MetricConfig& cfg) {
  if (!(horizon > 0.0)) throw DomainError("occupation_measure: T must be positive");
  if (path.horizon() < horizon) {
    throw DomainError("occupation_measure: path ends at " + format_double(path.horizon()) +
                      " before T=" + format_double(horizon));
  }
  std::vector<double> values, durations;
  for (std::size_t k = 0; k < path.values.size() && path.times[k] < horizon; ++k) {
    const double d = std::min(path.times[k + 1], horizon) - path.times[k];
    if (d <= 0.0) continue;
    values.push_back(path.values[k]);
    durations.push_back(d);
  }
  return bin_weighted(values, durations, cfg);
}

GridMeasure occupation_measure(const SampledPath& path, double horizon,
                               const MetricConfig& cfg) {
  if (!(horizon > 0.0)) throw DomainError("occupation_measure: T must be positive");
  if (path.horizon() < horizon * (1.0 - 1e-12)) {
    throw DomainError("occupation_measure: path shorter than T");
  }
  const auto count = std::min(
      path.values.size(), static_cast<std::size_t>(std::ceil(horizon / path.dt_out - 1e-9)));
  std::vector<double> durations(count, path.dt_out);
  const double last_end = path.dt_out * static_cast<double>(count);
  if (count > 0 && last_end > horizon) durations.back() -= last_end - horizon;
  return bin_weighted(std::span(path.values).first(count), durations, cfg);
}

void write_path_csv(std::ostream& out, const SampledPath& path) {
  out << "t,h\n";
  for (std::size_t k = 0; k < path.values.size(); ++k) {
    out << format_double(path.dt_out * static_cast<double>(k)) << ','
        << format_double(path.values[k]) << '\n';
  }
}

}  // namespace mixchain
