#include "mixchain/samplers.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <ostream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"
#include "mixchain/posterior.hpp"

namespace mixchain {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kTailSwitch = 4.0;

double upper_tail(double x) { return 0.5 * boost::math::erfc(x / kSqrt2); }

/// log(1 - Phi(x)), accurate far into the upper tail.
double log_upper_tail(double x) {
  if (x < 30.0) return std::log(upper_tail(x));
  const double r = 1.0 / (x * x);
  return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log1p(-r + 3.0 * r * r);
}

/// log(Phi(b) - Phi(a)) for a < b.
double log_interval_mass(double a, double b) {
  if (a > 0.0) {
    const double la = log_upper_tail(a), lb = log_upper_tail(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b < 0.0) return log_interval_mass(-b, -a);
  return std::log1p(-upper_tail(b) - upper_tail(-a));
}

/// log of the surrogate likelihood prod_i f_a(x_i)/f_0(x_i), a = eps theta,
/// from the dataset's sufficient statistics.
double shifted_log_likelihood(const MixtureFamily& family, const Dataset& ds, double a) {
  const double n = static_cast<double>(ds.size());
  const double s2 = family.sigma() * family.sigma();
  switch (family.kind()) {
    case FamilyKind::LocationNormal:
      return (a * ds.sum_x() - 0.5 * n * a * a) / s2;
    case FamilyKind::ScaleNormal: {
      const double shrink = 1.0 - a;
      return -n * std::log(shrink) - 0.5 * ds.sum_x2() / s2 * (1.0 / (shrink * shrink) - 1.0);
    }
    case FamilyKind::Custom:
      break;
  }
  throw UnsupportedFamily("quasi-shift proposal needs a built-in family");
}

std::vector<double> uniform_nodes(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k) {
    v[k] = k + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return v;
}

Proposal build_quasi_shift(const Dataset& ds, const MixtureFamily& family,
                           const PriorParams& prior) {
  constexpr double kEdge = 1e-12;
  constexpr double kFloor = 40.0;
  const double eps = family.epsilon();
  auto log_q = [&](double theta) {
    const double t = std::clamp(theta, kEdge, 1.0 - kEdge);
    return shifted_log_likelihood(family, ds, eps * t) + prior.log_density(t);
  };

  // Coarse scan for the region within e^-30 of the peak.
  const std::size_t coarse = 4097;
  const auto scan = uniform_nodes(0.0, 1.0, coarse);
  std::vector<double> lq(coarse);
  double peak = -INFINITY;
  for (std::size_t k = 0; k < coarse; ++k) {
    lq[k] = log_q(scan[k]);
    peak = std::max(peak, lq[k]);
  }
  if (!std::isfinite(peak)) throw DegenerateProposal("quasi-shift density has no finite peak");
  std::size_t first = coarse, last = 0;
  for (std::size_t k = 0; k < coarse; ++k) {
    if (lq[k] > peak - 30.0) {
      first = std::min(first, k);
      last = k;
    }
  }
  const double bulk_lo = scan[first == 0 ? 0 : first - 1];
  const double bulk_hi = scan[std::min(last + 1, coarse - 1)];

  PiecewiseLinearDensity table;
  double previous_mean = NAN;
  for (std::size_t points = 4096; points <= (std::size_t{1} << 20); points *= 2) {
    auto nodes = uniform_nodes(bulk_lo, bulk_hi, points * 3 / 4);
    const auto cover = uniform_nodes(0.0, 1.0, points / 4 + 1);
    nodes.insert(nodes.end(), cover.begin(), cover.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<double> values(nodes.size());
    double top = -INFINITY;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      values[k] = log_q(nodes[k]);
      top = std::max(top, values[k]);
    }
    // Floor keeps the proposal positive wherever the target lives.
    for (auto& v : values) v = std::exp(std::max(v - top, -kFloor));
    table = PiecewiseLinearDensity(std::move(nodes), std::move(values));
    if (std::abs(table.mean() - previous_mean) < 1e-6) break;
    previous_mean = table.mean();
  }
  return Proposal::tabulated(std::move(table));
}

Proposal build_quasi_moment(const Dataset& ds, const MixtureFamily& family) {
  const auto m = family.moments();
  if (!m) throw DegenerateProposal("quasi-moment proposal needs component moments");
  const double gap = m->mean_eps - m->mean0;
  if (std::abs(gap) <= 1e-12 * (1.0 + std::abs(m->mean0))) {
    throw DegenerateProposal("F_eps(x) = F_0(x): quasi-moment proposal is degenerate");
  }
  const double n = static_cast<double>(ds.size());
  const double var_kl = 0.5 * (m->var0 + m->var_eps);
  const double mu_q = (ds.mean() - m->mean0) / gap;
  const double sigma_q = std::sqrt(var_kl / (n * gap * gap));
  double tau2 = 0.0;
  if (family.kind() == FamilyKind::LocationNormal) {
    // F_0(x g(x)) = E[x^2] / sigma^2 = 1.
    tau2 = m->var0;
  }
  return Proposal::truncated(TruncatedNormal(mu_q, sigma_q, 0.0, 1.0), tau2);
}

}  // namespace

double LogPosterior::operator()(double theta) const {
  if (theta < 0.0 || theta > 1.0) return -INFINITY;
  return log_likelihood_ratio(ds_->ratio(), theta) + prior_.log_density(theta);
}

TruncatedNormal::TruncatedNormal(double mu, double sigma, double lo, double hi)
    : mu_(mu), sigma_(sigma), lo_(lo), hi_(hi) {
  if (!(sigma > 0.0 && std::isfinite(sigma)) || !std::isfinite(mu)) {
    throw DomainError("truncated normal needs finite mu and sigma > 0");
  }
  if (!(hi > lo)) throw DomainError("truncated normal needs lo < hi");
  alpha_ = (lo - mu) / sigma;
  beta_ = (hi - mu) / sigma;
  log_mass_ = log_interval_mass(alpha_, beta_);
  if (!std::isfinite(log_mass_)) {
    throw NumericalFailure("truncated normal interval carries no representable mass");
  }
}

double TruncatedNormal::sample_standard(double alpha, double beta, Rng& rng) const {
  if (beta < -kTailSwitch) return -sample_standard(-beta, -alpha, rng);
  if (alpha > kTailSwitch) {
    if (beta - alpha < 2.0 / alpha) {
      // Uniform proposal on a short far-tail interval.
      for (;;) {
        const double z = alpha + (beta - alpha) * rng.uniform();
        if (rng.uniform() <= std::exp(0.5 * (alpha * alpha - z * z))) return z;
      }
    }
    // Exponential proposal with the optimal rate for the tail at alpha.
    const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
    for (;;) {
      const double z = alpha + rng.exponential(rate);
      const double d = z - rate;
      if (z <= beta && rng.uniform() <= std::exp(-0.5 * d * d)) return z;
    }
  }
  const double u = rng.uniform();
  double z;
  if (alpha >= 0.0) {
    const double qa = upper_tail(alpha), qb = upper_tail(beta);
    const double q = qa - u * (qa - qb);
    z = kSqrt2 * boost::math::erfc_inv(2.0 * std::clamp(q, 1e-300, 1.0 - 1e-16));
  } else {
    const double pa = upper_tail(-alpha), pb = upper_tail(-beta);
    const double p = pa + u * (pb - pa);
    z = -kSqrt2 * boost::math::erfc_inv(2.0 * std::clamp(p, 1e-300, 1.0 - 1e-16));
  }
  return std::clamp(z, alpha, beta);
}

double TruncatedNormal::sample(Rng& rng) const {
  return std::clamp(mu_ + sigma_ * sample_standard(alpha_, beta_, rng), lo_, hi_);
}

double TruncatedNormal::log_density(double x) const {
  if (x < lo_ || x > hi_) return -INFINITY;
  const double z = (x - mu_) / sigma_;
  return -0.5 * z * z - std::log(sigma_) - kLogSqrt2Pi - log_mass_;
}

Proposal Proposal::tabulated(PiecewiseLinearDensity table) {
  return Proposal(std::move(table));
}

Proposal Proposal::truncated(TruncatedNormal tn, double tau2) {
  Proposal p(std::move(tn));
  p.tau2_ = tau2;
  return p;
}

ProposalKind Proposal::kind() const noexcept {
  return std::holds_alternative<TruncatedNormal>(impl_) ? ProposalKind::QuasiMoment
                                                        : ProposalKind::QuasiShift;
}

double Proposal::sample(Rng& rng) const {
  return std::visit([&](const auto& d) { return d.sample(rng); }, impl_);
}

double Proposal::log_density(double theta) const {
  return std::visit([&](const auto& d) { return d.log_density(theta); }, impl_);
}

const PiecewiseLinearDensity* Proposal::table() const noexcept {
  return std::get_if<PiecewiseLinearDensity>(&impl_);
}

const TruncatedNormal* Proposal::truncated_normal() const noexcept {
  return std::get_if<TruncatedNormal>(&impl_);
}

Proposal build_proposal(ProposalKind kind, const Dataset& ds,
                        const MixtureFamily& family, const PriorParams& prior) {
  prior.validate();
  if (kind == ProposalKind::QuasiShift) return build_quasi_shift(ds, family, prior);
  return build_quasi_moment(ds, family);
}

std::vector<double> head_probabilities(double theta, const Dataset& ds) {
  std::vector<double> p;
  p.reserve(ds.size());
  for (double s : ds.ratio()) p.push_back(theta * s / (1.0 - theta + theta * s));
  return p;
}

std::size_t da_head_count(double theta, const Dataset& ds, Rng& rng) {
  // Head iff u (1 - theta + theta s) < theta s, which is u < p_i without the
  // division; exact at theta = 0 (never) and theta = 1 (always).
  const double tails = 1.0 - theta;
  std::size_t heads = 0;
  for (double s : ds.ratio()) {
    const double hs = theta * s;
    heads += rng.uniform() * (tails + hs) < hs ? 1 : 0;
  }
  return heads;
}

double da_step(double theta, const Dataset& ds, const PriorParams& prior, Rng& rng) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("da_step: theta outside [0, 1]");
  const std::size_t heads = da_head_count(theta, ds, rng);
  const double n = static_cast<double>(ds.size());
  const double h = static_cast<double>(heads);
  return rng.beta(prior.alpha1 + h, prior.alpha0 + n - h);
}

ImhResult imh_step(double theta, double log_weight, const LogTarget& log_target,
                   const Proposal& proposal, Rng& rng) {
  if (!std::isfinite(log_weight)) {
    throw NumericalFailure("imh_step: log ratio is not finite at current theta=" +
                           format_double(theta));
  }
  const double candidate = proposal.sample(rng);
  const double candidate_weight = log_target(candidate) - proposal.log_density(candidate);
  if (std::isnan(candidate_weight) || candidate_weight == INFINITY) {
    throw NumericalFailure("imh_step: non-finite log ratio at proposed theta=" +
                           format_double(candidate) + " (current theta=" +
                           format_double(theta) + ")");
  }
  const double diff = candidate_weight - log_weight;
  if (diff >= 0.0 || std::log(rng.uniform()) < diff) {
    return {candidate, true, candidate_weight};
  }
  return {theta, false, log_weight};
}

ImhResult imh_step(double theta, const LogTarget& log_target,
                   const Proposal& proposal, Rng& rng) {
  return imh_step(theta, log_target(theta) - proposal.log_density(theta), log_target,
                  proposal, rng);
}

std::string KernelSpec::id() const {
  if (kind == Kind::DA) return "da";
  return proposal == ProposalKind::QuasiMoment ? "imh-moment" : "imh-shift";
}

KernelSpec KernelSpec::parse(const std::string& text) {
  const auto t = trim(text);
  if (t == "da") return {Kind::DA, ProposalKind::QuasiMoment};
  if (t == "imh-moment" || t == "mh") return {Kind::IMH, ProposalKind::QuasiMoment};
  if (t == "imh-shift") return {Kind::IMH, ProposalKind::QuasiShift};
  throw ParseError("unknown kernel '" + std::string(t) + "' (da, mh, imh-moment, imh-shift)");
}

double ChainPath::acceptance_rate() const {
  if (values.size() <= 1) return 0.0;
  return static_cast<double>(accepted) / static_cast<double>(values.size() - 1);
}

ChainPath run_chain(const KernelSpec& kernel, double theta0, std::size_t m,
                    const Dataset& ds, const PriorParams& prior,
                    const Proposal* proposal, Rng& rng) {
  if (m == 0) throw DomainError("run_chain: m must be at least 1");
  if (!(theta0 >= 0.0 && theta0 <= 1.0)) {
    throw DomainError("run_chain: theta0 outside [0, 1]");
  }
  ChainPath path;
  path.kernel = kernel.id();
  path.seed = rng.seed();
  path.n = ds.size();
  path.epsilon = ds.epsilon();
  path.lambda = ds.lambda();
  path.values.resize(m);
  path.values[0] = theta0;
  if (kernel.kind == KernelSpec::Kind::DA) {
    double theta = theta0;
    for (std::size_t i = 1; i < m; ++i) {
      theta = da_step(theta, ds, prior, rng);
      path.values[i] = theta;
    }
    return path;
  }
  if (proposal == nullptr) throw DomainError("run_chain: IMH kernel needs a proposal");
  const LogPosterior target(ds, prior);
  const LogTarget log_target = std::cref(target);
  ImhResult state{theta0, false, target(theta0) - proposal->log_density(theta0)};
  for (std::size_t i = 1; i < m; ++i) {
    state = imh_step(state.theta, state.log_weight, log_target, *proposal, rng);
    path.accepted += state.accepted ? 1 : 0;
    path.values[i] = state.theta;
  }
  return path;
}

ChainPath run_chain(const KernelSpec& kernel, double theta0, std::size_t m,
                    const Dataset& ds, const MixtureFamily& family,
                    const PriorParams& prior, Rng& rng) {
  if (kernel.kind == KernelSpec::Kind::DA) {
    return run_chain(kernel, theta0, m, ds, prior, nullptr, rng);
  }
  const Proposal proposal = build_proposal(kernel.proposal, ds, family, prior);
  return run_chain(kernel, theta0, m, ds, prior, &proposal, rng);
}

double ratio_bound(const LogTarget& log_target, const LogTarget& log_proposal,
                   std::size_t grid, double lo, double hi) {
  if (grid < 3) throw DomainError("ratio_bound: grid needs at least 3 points");
  const Tabulated target = tabulate(log_target, lo, hi, grid);
  const Tabulated prop = tabulate(log_proposal, lo, hi, grid);
  const auto p = target.densities();
  const auto q = prop.densities();
  double sup = 0.0;
  for (std::size_t k = 0; k < grid; ++k) {
    if (p[k] <= 1e-12) continue;
    if (!(q[k] > 0.0)) {
      throw UnboundedRatio("proposal density vanishes at theta=" + format_double(target.x[k]) +
                           " where the target is positive");
    }
    sup = std::max(sup, p[k] / q[k]);
  }
  return sup;
}

double ratio_bound_diagnostic(const Dataset& ds, const PriorParams& prior,
                              const Proposal& proposal, std::size_t grid) {
  const LogPosterior target(ds, prior);
  return ratio_bound(std::cref(target),
                     [&](double t) { return proposal.log_density(t); }, grid);
}

void write_chain_csv(std::ostream& out, const ChainPath& path) {
  out << "iter,theta\n";
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    out << i << ',' << format_double(path.values[i]) << '\n';
  }
}

void write_scaled_csv(std::ostream& out, const ChainPath& path, double theta_bayes) {
  const double root_n = std::sqrt(static_cast<double>(path.n));
  out << "iter,scaled\n";
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    out << i << ',' << format_double(root_n * (path.values[i] - theta_bayes)) << '\n';
  }
}

}  // namespace mixchain
