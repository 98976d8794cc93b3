#include "mixchain/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"
#include "mixchain/parallel.hpp"
#include "mixchain/posterior.hpp"

namespace mixchain {
namespace {

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

unsigned as_threads(std::size_t t) { return static_cast<unsigned>(std::max<std::size_t>(1, t)); }

}  // namespace

CoefficientEstimate estimate_coefficients(double h, const Dataset& ds,
                                          const PriorParams& prior, std::size_t reps,
                                          Rng& rng) {
  prior.validate();
  if (reps < 1000) throw DomainError("estimate_coefficients: reps must be >= 1000");
  if (!(h >= 0.0)) throw DomainError("estimate_coefficients: h must be >= 0");
  const double lambda = ds.lambda();
  const double theta = h / lambda;
  if (theta > 1.0) {
    throw DomainError("estimate_coefficients: h / lambda_n = " + format_double(theta) +
                      " exceeds 1");
  }
  std::vector<double> d1(reps), d2(reps), d4(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    const double delta = lambda * (da_step(theta, ds, prior, rng) - theta);
    const double sq = delta * delta;
    d1[k] = delta;
    d2[k] = sq;
    d4[k] = sq * sq;
  }
  const double r = ds.rate();
  const auto b = mean_se(d1), c = mean_se(d2), d = mean_se(d4);
  return {h, r * b.mean, r * c.mean, r * d.mean, r * b.se, r * c.se, r * d.se, reps};
}

RiskReport risk_curves(const Dataset& ds, const MixtureFamily& family,
                       const PriorParams& prior, const RiskConfig& cfg,
                       std::uint64_t seed) {
  if (cfg.chains == 0) throw DomainError("risk_curves: chains must be >= 1");
  if (cfg.m_list.empty()) throw DomainError("risk_curves: m_list is empty");
  for (auto m : cfg.m_list) {
    if (m == 0) throw DomainError("risk_curves: every m must be >= 1");
  }
  const PosteriorGrid post = posterior_grid(ds, prior, cfg.posterior_points);
  const double lambda = ds.lambda();
  MetricConfig mcfg = MetricConfig::fixed(0.0, post.measure.support().back(),
                                                cfg.grid_size);
  mcfg.cap = cfg.cap;
  const GridMeasure target = rebin(post.measure, mcfg);
  const PiecewiseLinearDensity start = post.interpolant();
  const std::size_t m_max = *std::max_element(cfg.m_list.begin(), cfg.m_list.end());

  std::optional<Proposal> proposal;
  if (cfg.kernel == RiskKernel::IMH) {
    proposal = build_proposal(cfg.proposal, ds, family, prior);
  }
  const std::size_t cols = cfg.m_list.size();
  std::vector<double> r(cfg.chains * cols), rp(cfg.chains * cols);
  parallel_for(cfg.chains, as_threads(cfg.threads), [&](std::size_t c) {
    Rng rng(derive_seed(seed, {c}));
    const double theta0 = std::clamp(start.sample(rng) / lambda, 0.0, 1.0);
    std::vector<double> path;
    if (cfg.kernel == RiskKernel::Iid) {
      path.resize(m_max);
      path[0] = theta0;
      for (std::size_t i = 1; i < m_max; ++i) {
        path[i] = std::clamp(start.sample(rng) / lambda, 0.0, 1.0);
      }
    } else {
      const KernelSpec spec{cfg.kernel == RiskKernel::DA ? KernelSpec::Kind::DA
                                                          : KernelSpec::Kind::IMH,
                            cfg.proposal};
      path = run_chain(spec, theta0, m_max, ds, prior,
                       proposal ? &*proposal : nullptr, rng)
                 .values;
    }
    for (double& v : path) v *= lambda;
    const GridMeasure initial = rebin(GridMeasure::point_mass(path[0]), mcfg);
    for (std::size_t j = 0; j < cols; ++j) {
      const GridMeasure e = bin_samples(std::span(path).first(cfg.m_list[j]), mcfg);
      r[c * cols + j] = bl_distance(e, target, mcfg);
      rp[c * cols + j] = bl_distance(e, initial, mcfg);
    }
  });

  RiskReport report;
  report.m = cfg.m_list;
  report.chains = cfg.chains;
  std::vector<double> col(cfg.chains);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t c = 0; c < cfg.chains; ++c) col[c] = r[c * cols + j];
    const auto a = mean_se(col);
    for (std::size_t c = 0; c < cfg.chains; ++c) col[c] = rp[c * cols + j];
    const auto b = mean_se(col);
    report.r.push_back(a.mean);
    report.se_r.push_back(a.se);
    report.r_prime.push_back(b.mean);
    report.se_r_prime.push_back(b.se);
  }
  return report;
}

void write_risk_csv(std::ostream& out, const RiskReport& report) {
  out << "m,R,Rprime,se_R,se_Rprime\n";
  for (std::size_t j = 0; j < report.m.size(); ++j) {
    out << report.m[j] << ',' << format_double(report.r[j]) << ','
        << format_double(report.r_prime[j]) << ',' << format_double(report.se_r[j]) << ','
        << format_double(report.se_r_prime[j]) << '\n';
  }
}

std::size_t SeTableConfig::replications_for(std::size_t n) const {
  if (replications != 0) return replications;
  return n <= 100 ? 1000 : 200;
}

std::vector<double> se_replication(const SeTableConfig& cfg, std::size_t n,
                                   std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  const MixtureFamily family = cfg.family.with_epsilon(cfg.epsilon.at(n));
  const Dataset ds = sample_dataset(family, cfg.theta_true, n, rng);
  const double bayes = posterior_grid(ds, cfg.prior, cfg.posterior_points).to_theta().mean;
  const double theta0 = moment_estimator(ds, family);
  const std::size_t m_max = *std::max_element(cfg.m_list.begin(), cfg.m_list.end());
  const ChainPath path = run_chain(cfg.kernel, theta0, m_max, ds, family, cfg.prior, rng);

  std::vector<std::size_t> order(cfg.m_list.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cfg.m_list[a] < cfg.m_list[b]; });
  std::vector<double> out(cfg.m_list.size());
  double sum = 0.0;
  std::size_t done = 0;
  for (std::size_t j : order) {
    const std::size_t m = cfg.m_list[j];
    for (; done < m; ++done) sum += path.values[done];
    out[j] = ds.lambda() * (sum / static_cast<double>(m) - bayes);
  }
  return out;
}

SeTable se_table(const SeTableConfig& cfg, std::uint64_t seed) {
  cfg.prior.validate();
  if (cfg.n_list.empty() || cfg.m_list.empty()) {
    throw DomainError("se_table: n_list and m_list must be nonempty");
  }
  for (auto m : cfg.m_list) {
    if (m == 0) throw DomainError("se_table: every m must be >= 1");
  }
  for (auto n : cfg.n_list) {
    if (n == 0) throw DomainError("se_table: every n must be >= 1");
    if (cfg.replications_for(n) < 100) {
      throw DomainError("se_table: replications must be >= 100");
    }
  }
  // Flatten (row, replication) so one pool serves every row.
  std::vector<std::size_t> row_start{0};
  for (auto n : cfg.n_list) row_start.push_back(row_start.back() + cfg.replications_for(n));
  const std::size_t total = row_start.back();
  const std::size_t cols = cfg.m_list.size();
  std::vector<double> values(total * cols);
  parallel_for(total, as_threads(cfg.threads), [&](std::size_t task) {
    const auto row = static_cast<std::size_t>(
        std::upper_bound(row_start.begin(), row_start.end(), task) - row_start.begin() - 1);
    const std::size_t rep = task - row_start[row];
    const auto v = se_replication(cfg, cfg.n_list[row], derive_seed(seed, {row, rep}));
    std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(task * cols));
  });

  SeTable table;
  table.n_list = cfg.n_list;
  table.m_list = cfg.m_list;
  table.epsilon = cfg.epsilon;
  table.kernel = cfg.kernel.id();
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const std::size_t reps = row_start[i + 1] - row_start[i];
    std::vector<double> col(reps);
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t r = 0; r < reps; ++r) col[r] = values[(row_start[i] + r) * cols + j];
      const double sd = sample_sd(col);
      table.cells.push_back({cfg.n_list[i], cfg.m_list[j], sd,
                             sd / std::sqrt(2.0 * static_cast<double>(reps - 1)), reps});
    }
  }
  return table;
}

void write_se_csv(std::ostream& out, const SeTable& table) {
  out << "n,m,se,mc_se,replications\n";
  for (const auto& c : table.cells) {
    out << c.n << ',' << c.m << ',' << format_double(c.se) << ',' << format_double(c.mc_se)
        << ',' << c.replications << '\n';
  }
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("log_log_slope: size mismatch");
  if (x.size() < 2) throw DomainError("log_log_slope: needs at least 2 points");
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) {
      throw DomainError("log_log_slope: values must be positive");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw DomainError("log_log_slope: x values are all equal");
  return sxy / sxx;
}

ScalingFit scaling_fit(const SeTable& table) {
  const std::size_t rows = table.n_list.size(), cols = table.m_list.size();
  if (cols < 2) throw DomainError("scaling_fit: needs at least 2 m-columns");
  ScalingFit fit;
  std::vector<double> m(cols), se(cols);
  for (std::size_t j = 0; j < cols; ++j) m[j] = static_cast<double>(table.m_list[j]);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) se[j] = table.at(i, j).se;
    fit.slope_m.push_back(log_log_slope(m, se));
  }
  for (std::size_t i = 0; i + 1 < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      fit.ratio_n.push_back(table.at(i + 1, j).se / table.at(i, j).se);
    }
  }
  return fit;
}

double autocorrelation(std::span<const double> path, std::size_t lag) {
  if (lag >= path.size()) throw DomainError("autocorrelation: lag must be < path length");
  // Rounding in the mean would leave a tiny positive variance for a flat path.
  if (std::all_of(path.begin(), path.end(), [&](double x) { return x == path.front(); }))
    throw DomainError("autocorrelation: path has zero variance");
  const double n = static_cast<double>(path.size());
  const double mean = std::accumulate(path.begin(), path.end(), 0.0) / n;
  double var = 0.0;
  for (double x : path) var += (x - mean) * (x - mean);
  if (!(var > 0.0)) throw DomainError("autocorrelation: path has zero variance");
  double cov = 0.0;
  for (std::size_t i = 0; i + lag < path.size(); ++i) {
    cov += (path[i] - mean) * (path[i + lag] - mean);
  }
  return cov / var;
}

double batch_means_se(std::span<const double> path, std::size_t batches) {
  if (batches < 2) throw DomainError("batch_means_se: needs at least 2 batches");
  const std::size_t size = path.size() / batches;
  if (size == 0) throw DomainError("batch_means_se: path shorter than the batch count");
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto first = path.begin() + static_cast<std::ptrdiff_t>(b * size);
    means[b] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(size), 0.0) /
               static_cast<double>(size);
  }
  return mean_se(means).se;
}

StepProcessPath embedded_da_path(double theta0, double horizon, const Dataset& ds,
                                 const PriorParams& prior, Rng& rng) {
  if (!(horizon > 0.0)) throw DomainError("embedded_da_path: horizon must be positive");
  StepProcessPath path;
  path.times.push_back(0.0);
  double theta = theta0;
  for (;;) {
    path.values.push_back(ds.lambda() * theta);
    path.times.push_back(path.times.back() + rng.exponential(ds.rate()));
    if (path.times.back() >= horizon) return path;
    theta = da_step(theta, ds, prior, rng);
  }
}

}  // namespace mixchain
