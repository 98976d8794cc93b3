#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "mixchain/config.hpp"
#include "mixchain/diagnostics.hpp"
#include "mixchain/diffusion.hpp"
#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"
#include "mixchain/parallel.hpp"
#include "mixchain/posterior.hpp"

namespace mixchain {
namespace {

namespace fs = std::filesystem;

class Outputs {
 public:
  explicit Outputs(const ExperimentConfig& cfg) : cfg_(cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + cfg.out + "': " + ec.message());
  }

  /// Opens out/name with the metadata header already written.
  std::ofstream open(const std::string& name) {
    const std::string path = (fs::path(cfg_.out) / name).string();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_metadata_header(f, cfg_);
    paths_.push_back(path);
    return f;
  }

  static void close(std::ofstream& f, const std::string& name) {
    f.flush();
    if (!f) throw std::runtime_error("write failed for '" + name + "'");
  }

  std::vector<std::string> paths() && { return std::move(paths_); }

 private:
  const ExperimentConfig& cfg_;
  std::vector<std::string> paths_;
};

unsigned threads_of(const ExperimentConfig& cfg) {
  return static_cast<unsigned>(std::max<std::size_t>(1, cfg.threads));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

struct LoadedData {
  MixtureFamily family;
  Dataset ds;
};

/// The configured dataset: read from `data` when set, otherwise drawn from
/// stream {0} of the master seed.
LoadedData load_dataset(const ExperimentConfig& cfg) {
  if (!cfg.data.empty()) {
    std::ifstream in(cfg.data);
    if (!in) throw std::runtime_error("cannot open dataset '" + cfg.data + "'");
    auto x = read_dataset_csv(in);
    if (x.empty()) throw CorruptDataset("dataset '" + cfg.data + "' has no rows");
    const auto family = cfg.make_family(cfg.epsilon.at(x.size()));
    return {family, Dataset::from_observations(family, std::move(x))};
  }
  const auto family = cfg.make_family(cfg.epsilon.at(cfg.n));
  Rng rng(derive_seed(cfg.seed, {0}));
  return {family, sample_dataset(family, cfg.theta_true, cfg.n, rng)};
}

void run_gen(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const auto [family, ds] = load_dataset(cfg);
  auto f = out.open("dataset.csv");
  write_dataset_csv(f, ds);
  Outputs::close(f, "dataset.csv");
  auto meta = out.open("dataset.meta");
  write_dataset_meta(meta, {family.name(), family.epsilon(), family.sigma(), ds.size(),
                            cfg.seed, cfg.theta_true});
  Outputs::close(meta, "dataset.meta");
  log << "n=" << ds.size() << " eps=" << format_double(ds.epsilon())
      << " Z_n=" << format_double(ds.z()) << '\n';
}

void run_chain_command(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const auto [family, ds] = load_dataset(cfg);
  const double bayes = posterior_grid(ds, cfg.prior, cfg.posterior_points).to_theta().mean;
  Rng rng(derive_seed(cfg.seed, {1}));
  std::optional<Proposal> proposal;
  if (cfg.kernel.kind == KernelSpec::Kind::IMH || cfg.init == "proposal") {
    proposal = build_proposal(cfg.kernel.proposal, ds, family, cfg.prior);
  }
  const double theta0 =
      cfg.init == "proposal" ? proposal->sample(rng) : moment_estimator(ds, family);
  const ChainPath path = run_chain(cfg.kernel, theta0, cfg.m, ds, cfg.prior,
                                   proposal ? &*proposal : nullptr, rng);
  auto f = out.open("chain.csv");
  write_chain_csv(f, path);
  Outputs::close(f, "chain.csv");
  if (cfg.emit_scaled) {
    auto s = out.open("scaled.csv");
    write_scaled_csv(s, path, bayes);
    Outputs::close(s, "scaled.csv");
  }
  log << "kernel=" << path.kernel << " theta0=" << format_double(theta0)
      << " posterior_mean=" << format_double(bayes);
  if (cfg.kernel.kind == KernelSpec::Kind::IMH) {
    log << " acceptance=" << format_double(path.acceptance_rate());
  }
  if (path.values.size() > 1) {
    try {
      log << " acf1=" << format_double(autocorrelation(path.values, 1));
    } catch (const DomainError&) {
      log << " acf1=undefined";
    }
  }
  log << '\n';
}

void run_table(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  SeTableConfig tc;
  tc.family = cfg.make_family(cfg.epsilon.at(cfg.n_list.front()));
  tc.prior = cfg.prior;
  tc.epsilon = cfg.epsilon;
  tc.n_list = cfg.n_list;
  tc.m_list = cfg.m_list;
  tc.replications = cfg.replications;
  tc.kernel = cfg.kernel;
  tc.theta_true = cfg.theta_true;
  tc.posterior_points = cfg.posterior_points;
  tc.threads = cfg.threads;
  const SeTable table = se_table(tc, cfg.seed);
  auto f = out.open("se_table.csv");
  write_se_csv(f, table);
  Outputs::close(f, "se_table.csv");
  for (std::size_t i = 0; i < table.n_list.size(); ++i) {
    log << "n=" << table.n_list[i];
    for (std::size_t j = 0; j < table.m_list.size(); ++j) {
      log << ' ' << format_double(table.at(i, j).se);
    }
    log << '\n';
  }
  if (table.m_list.size() >= 2) {
    const auto fit = scaling_fit(table);
    for (std::size_t i = 0; i < fit.slope_m.size(); ++i) {
      log << "slope n=" << table.n_list[i] << ' ' << format_double(fit.slope_m[i]) << '\n';
    }
  }
}

void run_coeffs(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const auto [family, ds] = load_dataset(cfg);
  std::vector<CoefficientEstimate> est(cfg.h_list.size());
  parallel_for(est.size(), threads_of(cfg), [&](std::size_t k) {
    Rng rng(derive_seed(cfg.seed, {1, k}));
    est[k] = estimate_coefficients(cfg.h_list[k], ds, cfg.prior, cfg.reps, rng);
  });
  auto f = out.open("coeffs.csv");
  f << "h,b_hat,se_b,c_hat,se_c,d_hat,se_d,reps,b_limit,c_limit\n";
  for (const auto& e : est) {
    const auto lim = sde_coefficients(e.h, {ds.z(), cfg.prior.alpha1, family.fisher()});
    f << format_double(e.h) << ',' << format_double(e.b_hat) << ',' << format_double(e.se_b)
      << ',' << format_double(e.c_hat) << ',' << format_double(e.se_c) << ','
      << format_double(e.d_hat) << ',' << format_double(e.se_d) << ',' << e.reps << ','
      << format_double(lim.drift) << ',' << format_double(lim.variance) << '\n';
    log << "h=" << format_double(e.h) << " b=" << format_double(e.b_hat)
        << " c=" << format_double(e.c_hat) << " d=" << format_double(e.d_hat) << '\n';
  }
  Outputs::close(f, "coeffs.csv");
}

/// Shared driver for bvm and lan: one dataset per (n index, replicate).
template <typename Fn>
void run_per_dataset(const ExperimentConfig& cfg, Outputs& out, std::ostream& log,
                     const std::string& file, const std::string& columns, Fn&& stat) {
  const std::size_t per = cfg.datasets;
  const std::size_t total = cfg.n_list.size() * per;
  std::vector<std::vector<double>> rows(total);
  std::vector<double> zs(total);
  parallel_for(total, threads_of(cfg), [&](std::size_t task) {
    const std::size_t i = task / per, d = task % per;
    const std::size_t n = cfg.n_list[i];
    const auto family = cfg.make_family(cfg.epsilon.at(n));
    Rng rng(derive_seed(cfg.seed, {i, d}));
    const Dataset ds = sample_dataset(family, cfg.theta_true, n, rng);
    zs[task] = ds.z();
    rows[task] = stat(ds, family);
  });
  auto f = out.open(file);
  f << "n,dataset,z," << columns << '\n';
  for (std::size_t task = 0; task < total; ++task) {
    f << cfg.n_list[task / per] << ',' << task % per << ',' << format_double(zs[task]);
    for (double v : rows[task]) f << ',' << format_double(v);
    f << '\n';
  }
  Outputs::close(f, file);
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    std::vector<double> first(per);
    for (std::size_t d = 0; d < per; ++d) first[d] = rows[i * per + d].front();
    log << "n=" << cfg.n_list[i] << " median_" << columns.substr(0, columns.find(','))
        << '=' << format_double(median(first)) << '\n';
  }
}

void run_diffusion(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const DiffusionSpec spec{cfg.z, cfg.prior.alpha1, cfg.fisher};
  const SdeInit init = cfg.sde_init == "stationary"
                           ? SdeInit::stationary()
                           : SdeInit::fixed(std::stod(cfg.sde_init.substr(6)));
  Rng rng(derive_seed(cfg.seed, {0}));
  const SampledPath path = simulate_sde(spec, init, cfg.T, cfg.dt, rng, cfg.stride);
  auto f = out.open("path.csv");
  write_path_csv(f, path);
  Outputs::close(f, "path.csv");

  const LimitPosterior limit = limit_posterior(cfg.z, cfg.fisher, cfg.prior.alpha1);
  const double hi = std::max(limit.measure.support().back(),
                             *std::max_element(path.values.begin(), path.values.end()));
  MetricConfig mcfg = MetricConfig::fixed(0.0, hi, cfg.grid_size);
  mcfg.cap = cfg.cap;
  const double bl = bl_distance(occupation_measure(path, path.horizon(), mcfg),
                                rebin(limit.measure, mcfg), mcfg);
  log << "time_average=" << format_double(path.time_average())
      << " limit_mean=" << format_double(limit.mean) << " bl=" << format_double(bl) << '\n';
}

void run_risk(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const auto [family, ds] = load_dataset(cfg);
  RiskConfig rc;
  rc.kernel = cfg.risk_kernel == "da"    ? RiskKernel::DA
              : cfg.risk_kernel == "imh" ? RiskKernel::IMH
                                         : RiskKernel::Iid;
  rc.proposal = cfg.kernel.proposal;
  rc.m_list = cfg.m_list;
  rc.chains = cfg.chains;
  rc.grid_size = cfg.grid_size;
  rc.cap = cfg.cap;
  rc.posterior_points = cfg.posterior_points;
  rc.threads = cfg.threads;
  const RiskReport report = risk_curves(ds, family, cfg.prior, rc, derive_seed(cfg.seed, {1}));
  auto f = out.open("risk.csv");
  write_risk_csv(f, report);
  Outputs::close(f, "risk.csv");
  for (std::size_t j = 0; j < report.m.size(); ++j) {
    log << "m=" << report.m[j] << " R=" << format_double(report.r[j])
        << " Rprime=" << format_double(report.r_prime[j]) << '\n';
  }
}

}  // namespace

std::vector<std::string> dispatch(const ExperimentConfig& cfg, std::ostream& log) {
  Outputs out(cfg);
  switch (cfg.command) {
    case Command::Gen: run_gen(cfg, out, log); break;
    case Command::Chain: run_chain_command(cfg, out, log); break;
    case Command::Table: run_table(cfg, out, log); break;
    case Command::Coeffs: run_coeffs(cfg, out, log); break;
    case Command::Bvm:
      run_per_dataset(cfg, out, log, "bvm.csv", "tv,tail",
                      [&](const Dataset& ds, const MixtureFamily& family) {
                        const auto r = bvm_distance(ds, family, cfg.prior, cfg.tail_threshold,
                                                    cfg.posterior_points);
                        return std::vector<double>{r.tv, r.tail};
                      });
      break;
    case Command::Lan:
      run_per_dataset(cfg, out, log, "lan.csv", "residual",
                      [&](const Dataset& ds, const MixtureFamily& family) {
                        return std::vector<double>{
                            lan_residual(ds, family, cfg.h_max, cfg.lan_grid)};
                      });
      break;
    case Command::Diffusion: run_diffusion(cfg, out, log); break;
    case Command::Risk: run_risk(cfg, out, log); break;
  }
  return std::move(out).paths();
}

}  // namespace mixchain
