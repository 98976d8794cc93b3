#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixchain/diagnostics.hpp"
#include "mixchain/errors.hpp"
#include "mixchain/posterior.hpp"

using namespace mixchain;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

SeTable table_from(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& ms,
                   const std::vector<double>& values) {
  SeTable t;
  t.n_list = ns;
  t.m_list = ms;
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = 0; j < ms.size(); ++j)
      t.cells.push_back({ns[i], ms[j], values[i * ms.size() + j], 0.0, 1});
  return t;
}

}  // namespace

TEST_CASE("coefficients at h = 0 match Beta moments") {
  const auto fam = MixtureFamily::location_normal(1.0);
  const PriorParams prior{};
  Rng rng(11);
  for (std::size_t n : {100u, 10000u}) {
    const auto ds = sample_dataset(fam, 0.0, n, rng);
    const auto est = estimate_coefficients(0.0, ds, prior, 100000, rng);
    const double nn = static_cast<double>(n);
    const double b = nn * prior.alpha1 / (nn + prior.alpha1 + prior.alpha0);
    const double c = 2.0 * nn * ds.lambda() / ((nn + 2.0) * (nn + 3.0));
    CHECK(std::abs(est.b_hat - b) < 3.0 * est.se_b);
    CHECK(std::abs(est.c_hat - c) < 3.0 * est.se_c);
    CHECK(est.c_hat >= 0.0);
    CHECK(est.d_hat >= 0.0);
    CHECK(est.reps == 100000);
  }
}

TEST_CASE("coefficient arguments") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(12);
  const auto ds = sample_dataset(fam, 0.0, 100, rng);
  CHECK_THROWS_AS(estimate_coefficients(10.5, ds, {}, 1000, rng), DomainError);
  CHECK_THROWS_AS(estimate_coefficients(-0.5, ds, {}, 1000, rng), DomainError);
  CHECK_THROWS_AS(estimate_coefficients(1.0, ds, {}, 999, rng), DomainError);
  CHECK_NOTHROW(estimate_coefficients(10.0, ds, {}, 1000, rng));
}

TEST_CASE("diffusion coefficient c at n = 1e4, h = 1") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(13);
  const auto ds = sample_dataset(fam, 0.0, 10000, rng);
  const auto est = estimate_coefficients(1.0, ds, {}, 100000, rng);
  MESSAGE("c_hat=" << est.c_hat << " se=" << est.se_c << " b_hat=" << est.b_hat
                   << " d_hat=" << est.d_hat << " Z_n=" << ds.z());
  CHECK(std::abs(est.c_hat - 2.0) <= 0.05 + 3.0 * est.se_c);
}

TEST_CASE("fourth-moment coefficient shrinks with n") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(14);
  std::vector<double> small, large;
  for (int d = 0; d < 20; ++d) {
    small.push_back(estimate_coefficients(1.0, sample_dataset(fam, 0.0, 100, rng), {}, 2000, rng).d_hat);
    large.push_back(estimate_coefficients(1.0, sample_dataset(fam, 0.0, 10000, rng), {}, 2000, rng).d_hat);
  }
  CHECK(median(large) < median(small));
}

TEST_CASE("risk curves at r_n = 100") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(15);
  const auto ds = sample_dataset(fam, 0.0, 10000, rng);
  RiskConfig cfg;
  cfg.chains = 10;
  cfg.m_list = {1, 10, 100, 1000, 10000};
  const auto rep = risk_curves(ds, fam, {}, cfg, 99);
  REQUIRE(rep.m == cfg.m_list);
  CHECK(rep.r_prime[0] == 0.0);
  CHECK(rep.r_prime[1] < rep.r_prime[3]);
  CHECK(rep.r[4] < rep.r[2]);
  for (std::size_t k = 0; k < rep.m.size(); ++k) {
    CHECK(rep.r[k] >= 0.0);
    CHECK(rep.r[k] <= 2.0);
    CHECK(rep.r_prime[k] >= 0.0);
    CHECK(rep.r_prime[k] <= 2.0);
  }
}

TEST_CASE("risk of i.i.d. posterior draws decays like m^-1/2") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(16);
  const auto ds = sample_dataset(fam, 0.0, 100, rng);
  RiskConfig cfg;
  cfg.kernel = RiskKernel::Iid;
  cfg.chains = 50;
  cfg.m_list = {10, 100, 1000, 10000};
  const auto rep = risk_curves(ds, fam, {}, cfg, 5);
  std::vector<double> m(rep.m.begin(), rep.m.end());
  const double slope = log_log_slope(m, rep.r);
  MESSAGE("iid slope " << slope);
  CHECK(std::abs(slope + 0.5) <= 0.07);
}

TEST_CASE("risk decays on the r_n time scale") {
  // r_n = 10 and r_n = 50: curves indexed by m / r_n line up better than by m.
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(17);
  RiskConfig cfg;
  cfg.chains = 20;
  const auto a_ds = sample_dataset(fam, 0.0, 100, rng);
  const auto b_ds = sample_dataset(fam, 0.0, 2500, rng);
  cfg.m_list = {20, 100, 200, 1000, 2000};
  const auto a = risk_curves(a_ds, fam, {}, cfg, 1).r;
  cfg.m_list = {100, 500, 1000, 5000, 10000};
  const auto b = risk_curves(b_ds, fam, {}, cfg, 2).r;
  // Same m / r_n: (20,100), (200,1000), (2000,10000). Same m: (100,100), (1000,1000).
  const double by_time = (std::abs(std::log(a[0] / b[0])) + std::abs(std::log(a[2] / b[2])) +
                          std::abs(std::log(a[4] / b[4]))) / 3.0;
  const double by_m = (std::abs(std::log(a[1] / b[0])) + std::abs(std::log(a[3] / b[2]))) / 2.0;
  MESSAGE("by m/r_n " << by_time << " by m " << by_m);
  CHECK(by_time < by_m);
}

TEST_CASE("se_table does not depend on the thread count") {
  SeTableConfig cfg;
  cfg.n_list = {10, 30};
  cfg.m_list = {100, 1000};
  cfg.replications = 100;
  cfg.threads = 1;
  const auto one = se_table(cfg, 2024);
  cfg.threads = 3;
  const auto three = se_table(cfg, 2024);
  REQUIRE(one.cells.size() == 4);
  for (std::size_t k = 0; k < one.cells.size(); ++k) {
    CHECK(one.cells[k].se == three.cells[k].se);
    CHECK(one.cells[k].mc_se == three.cells[k].mc_se);
    CHECK(one.cells[k].replications == 100);
    CHECK(one.cells[k].se > 0.0);
  }
  CHECK(one.at(1, 0).n == 30);
  CHECK(one.at(1, 0).m == 100);
}

TEST_CASE("replication counts") {
  SeTableConfig cfg;
  CHECK(cfg.replications_for(10) == 1000);
  CHECK(cfg.replications_for(100) == 1000);
  CHECK(cfg.replications_for(1000) == 200);
  cfg.replications = 300;
  CHECK(cfg.replications_for(1000) == 300);
}

TEST_CASE("se replication returns one prefix mean per m") {
  SeTableConfig cfg;
  cfg.m_list = {100, 1000};
  const auto v = se_replication(cfg, 10, 7);
  REQUIRE(v.size() == 2);
  CHECK(v == se_replication(cfg, 10, 7));
}

TEST_CASE("scaling fit") {
  const std::vector<std::size_t> ns{10, 100}, ms{100, 1000, 10000, 100000};
  std::vector<double> exact;
  for (double c : {0.7, 2.3})
    for (auto m : ms) exact.push_back(c / std::sqrt(static_cast<double>(m)));
  const auto fit = scaling_fit(table_from(ns, ms, exact));
  REQUIRE(fit.slope_m.size() == 2);
  CHECK(std::abs(fit.slope_m[0] + 0.5) < 1e-12);
  CHECK(std::abs(fit.slope_m[1] + 0.5) < 1e-12);
  CHECK(fit.ratio_n[0] == doctest::Approx(2.3 / 0.7));

  // DA, eps = 1, reference values.
  const auto reference = table_from({10, 100, 1000}, ms,
                                    {0.3199809, 0.1012226, 0.03217747, 0.009997727,
                                     0.766464, 0.2492395, 0.07961785, 0.0249476,
                                     2.075795, 0.7136275, 0.2223515, 0.06771291});
  const auto pf = scaling_fit(reference);
  for (double s : pf.slope_m) {
    CHECK(s >= -0.55);
    CHECK(s <= -0.45);
  }
  CHECK(pf.ratio_n[0] == doctest::Approx(2.40).epsilon(0.01));
  CHECK(pf.ratio_n[ms.size()] == doctest::Approx(2.71).epsilon(0.01));

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(log_log_slope(one, one), DomainError);
}

TEST_CASE("autocorrelation") {
  Rng rng(18);
  std::vector<double> iid(100000);
  for (auto& v : iid) v = rng.uniform();
  CHECK(std::abs(autocorrelation(iid, 1)) < 0.01);
  CHECK(autocorrelation(iid, 0) == doctest::Approx(1.0));
  const std::vector<double> flat(100, 0.3);
  CHECK_THROWS_AS(autocorrelation(flat, 1), DomainError);
  CHECK_THROWS_AS(autocorrelation(iid, iid.size()), DomainError);

  const auto fam = MixtureFamily::location_normal(1.0);
  const auto ds = sample_dataset(fam, 0.0, 10000, rng);
  const double start = moment_estimator(ds, fam);
  const auto da = run_chain(KernelSpec{}, start, 5000, ds, fam, {}, rng);
  const auto mh = run_chain(KernelSpec::parse("mh"), start, 5000, ds, fam, {}, rng);
  CHECK(autocorrelation(da.values, 1) > 0.9);
  CHECK(autocorrelation(mh.values, 1) < 0.6);
}

TEST_CASE("batch means standard error of i.i.d. draws") {
  Rng rng(19);
  std::vector<double> iid(100000);
  for (auto& v : iid) v = rng.normal();
  CHECK(batch_means_se(iid) == doctest::Approx(1.0 / std::sqrt(1e5)).epsilon(0.25));
}

TEST_CASE("embedded DA path") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(20);
  const auto ds = sample_dataset(fam, 0.0, 400, rng);
  const auto path = embedded_da_path(0.05, 5.0, ds, {}, rng);
  CHECK(path.horizon() >= 5.0);
  CHECK(path.values.front() == doctest::Approx(0.05 * ds.lambda()));
  for (double v : path.values) CHECK(v >= 0.0);
  // Roughly r_n * T jumps.
  const double jumps = static_cast<double>(path.values.size());
  CHECK(std::abs(jumps - ds.rate() * 5.0) < 5.0 * std::sqrt(ds.rate() * 5.0) + 2.0);
}

TEST_CASE("CSV exports") {
  std::stringstream se;
  write_se_csv(se, table_from({10}, {100}, {0.25}));
  CHECK(se.str().rfind("n,m,se,mc_se,replications\n10,100,0.25,0,1", 0) == 0);
  RiskReport rep;
  rep.m = {1};
  rep.r = {0.5};
  rep.r_prime = {0.0};
  rep.se_r = {0.1};
  rep.se_r_prime = {0.0};
  std::stringstream rk;
  write_risk_csv(rk, rep);
  CHECK(rk.str() == "m,R,Rprime,se_R,se_Rprime\n1,0.5,0,0.1,0\n");
}

TEST_CASE("embedded DA path tracks the diffusion when eps is small") {
  // n = 2500, eps = 0.2: lambda_n = 10, r_n = 250.
  const auto fam = MixtureFamily::location_normal(0.2);
  double total = 0.0;
  const int datasets = 6;
  for (int d = 0; d < datasets; ++d) {
    Rng rng(derive_seed(31, {static_cast<std::uint64_t>(d)}));
    const auto ds = sample_dataset(fam, 0.0, 2500, rng);
    const double theta0 = posterior_grid(ds, {}).to_theta().interpolant().sample(rng);
    const auto chain = embedded_da_path(theta0, 200.0, ds, {}, rng);
    const auto sde = simulate_sde({ds.z(), 1.0, 1.0}, SdeInit::fixed(theta0 * ds.lambda()), 200.0,
                                  1e-3, rng, 10);
    const double hi = std::max(*std::max_element(chain.values.begin(), chain.values.end()),
                               *std::max_element(sde.values.begin(), sde.values.end()));
    const auto cfg = MetricConfig::fixed(0.0, hi, 512);
    total += bl_distance(occupation_measure(chain, 200.0, cfg), occupation_measure(sde, 200.0, cfg), cfg);
  }
  MESSAGE("mean bl " << total / datasets);
  CHECK(total / datasets <= 0.1);
}
