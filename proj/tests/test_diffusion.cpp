#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mixchain/diagnostics.hpp"
#include "mixchain/diffusion.hpp"
#include "mixchain/errors.hpp"
#include "mixchain/posterior.hpp"

using namespace mixchain;

TEST_CASE("sde coefficients") {
  const DiffusionSpec unit{0.0, 1.0, 1.0};
  auto c = sde_coefficients(0.0, {0.3, 2.5, 1.0});
  CHECK(c.drift == 2.5);
  CHECK(c.variance == 0.0);
  c = sde_coefficients(1.0, unit);
  CHECK(c.drift == 0.0);
  CHECK(c.variance == 2.0);
  c = sde_coefficients(2.0, {2.0, 1.0, 1.0});
  CHECK(c.drift == 1.0);
  CHECK(c.variance == 4.0);
  CHECK_THROWS_AS(sde_coefficients(-0.1, unit), DomainError);
}

TEST_CASE("simulate_sde arguments and first step") {
  const DiffusionSpec spec{0.0, 1.5, 1.0};
  Rng rng(1);
  const auto path = simulate_sde(spec, SdeInit::fixed(0.0), 0.01, 1e-3, rng);
  REQUIRE(path.values.size() == 10);
  CHECK(path.values[0] == 0.0);
  CHECK(path.values[1] == doctest::Approx(1.5e-3).epsilon(1e-14));
  CHECK_THROWS_AS(simulate_sde(spec, SdeInit::fixed(0.0), 1.0, 0.0, rng), DomainError);
  CHECK_THROWS_AS(simulate_sde(spec, SdeInit::fixed(0.0), 1.0, -1e-3, rng), DomainError);
  CHECK_THROWS_AS(simulate_sde(spec, SdeInit::fixed(0.0), 1.0, 0.02, rng), DomainError);
  CHECK_THROWS_AS(simulate_sde(spec, SdeInit::fixed(0.0), 0.0, 1e-3, rng), DomainError);
  CHECK_THROWS_AS(simulate_sde({0.0, 0.0, 1.0}, SdeInit::fixed(0.0), 1.0, 1e-3, rng), DomainError);
  CHECK_THROWS_AS(simulate_sde(spec, SdeInit::fixed(-1.0), 1.0, 1e-3, rng), DomainError);
}

TEST_CASE("reported paths are nonnegative") {
  Rng rng(2);
  // Strong negative drift at large h and alpha1 < 1 both push toward 0.
  const auto path = simulate_sde({-3.0, 0.2, 1.0}, SdeInit::fixed(0.5), 200.0, 1e-2, rng);
  CHECK(*std::min_element(path.values.begin(), path.values.end()) >= 0.0);
}

TEST_CASE("long-run average is the half-normal mean and stable in dt") {
  const DiffusionSpec spec{0.0, 1.0, 1.0};
  const double target = std::sqrt(2.0 / std::numbers::pi);
  Rng rng(3);
  const auto coarse = simulate_sde(spec, SdeInit::stationary(), 1e4, 1e-3, rng, 10);
  CHECK(std::abs(coarse.time_average() - target) < 0.02);

  Rng a(4), b(5);
  const double avg1 = simulate_sde(spec, SdeInit::stationary(), 1e5, 1e-3, a, 100).time_average();
  const double avg2 = simulate_sde(spec, SdeInit::stationary(), 1e5, 5e-4, b, 100).time_average();
  CHECK(std::abs(avg1 - avg2) < 0.01);
}

TEST_CASE("sde occupation measure matches the limit posterior") {
  const DiffusionSpec spec{0.0, 1.0, 1.0};
  Rng rng(6);
  const auto path = simulate_sde(spec, SdeInit::stationary(), 1e4, 1e-3, rng, 10);
  const auto lp = limit_posterior(0.0, 1.0, 1.0);
  const double hi = std::max(lp.measure.support().back(), *std::max_element(path.values.begin(), path.values.end()));
  const auto cfg = MetricConfig::fixed(0.0, hi, 512);
  const auto occ = occupation_measure(path, 1e4, cfg);
  CHECK(bl_distance(occ, rebin(lp.measure, cfg), cfg) < 0.05);
}

TEST_CASE("poisson embedding") {
  Rng rng(7);
  const std::vector<double> one{0.2};
  const auto single = poisson_embed(one, 5.0, 10.0, rng);
  REQUIRE(single.values.size() == 1);
  CHECK(single.values[0] == 2.0);
  REQUIRE(single.times.size() == 2);
  CHECK(single.times[0] == 0.0);
  CHECK(single.times[1] > 0.0);

  const std::vector<double> chain(50, 0.1);
  const auto det = poisson_embed(chain, 10.0, 1.0, rng, ClockKind::Deterministic);
  for (std::size_t k = 0; k < det.times.size(); ++k) {
    CHECK(det.times[k] == doctest::Approx(0.1 * static_cast<double>(k)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(poisson_embed(std::vector<double>{}, 1.0, 1.0, rng), DomainError);
  CHECK_THROWS_AS(poisson_embed(one, 0.0, 1.0, rng), DomainError);
}

TEST_CASE("poisson clock has mean r_n jumps per unit time") {
  Rng rng(8);
  const double rate = 37.0;
  const std::vector<double> chain(200, 0.0);
  const int reps = 10000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto p = poisson_embed(chain, rate, 1.0, rng);
    // Jumps in [0, 1] are the interior epochs times[1..] that are <= 1.
    const auto jumps = static_cast<double>(
        std::upper_bound(p.times.begin() + 1, p.times.end(), 1.0) - (p.times.begin() + 1));
    s += jumps;
    s2 += jumps * jumps;
  }
  const double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - rate) < 3.0 * se);
}

TEST_CASE("occupation measures of step paths") {
  const auto cfg = MetricConfig::fixed(0.0, 4.0, 4);
  StepProcessPath flat{{0.0, 0.7, 2.0}, {1.2, 1.2}};
  const auto a = occupation_measure(flat, 2.0, cfg);
  REQUIRE(a.size() == 1);
  CHECK(a.support()[0] == 1.5);

  StepProcessPath alt{{0.0, 1.0, 2.0, 3.0, 4.0}, {0.5, 2.5, 0.5, 2.5}};
  const auto b = occupation_measure(alt, 4.0, cfg);
  REQUIRE(b.size() == 2);
  CHECK(b.weights()[0] == doctest::Approx(0.5));
  CHECK(b.weights()[1] == doctest::Approx(0.5));
  // Truncation at T inside a sojourn.
  const auto c = occupation_measure(alt, 1.5, cfg);
  CHECK(c.weights()[0] == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(occupation_measure(alt, 5.0, cfg), DomainError);
  SampledPath sp{0.1, {1.0, 1.0, 1.0}};
  CHECK_THROWS_AS(occupation_measure(sp, 1.0, cfg), DomainError);
  CHECK(occupation_measure(sp, 0.3, cfg).size() == 1);
}

TEST_CASE("poisson embedding preserves the chain's visit distribution") {
  const auto fam = MixtureFamily::location_normal(1.0);
  Rng rng(9);
  const auto ds = sample_dataset(fam, 0.0, 1000, rng);
  const auto chain = run_chain(KernelSpec{}, moment_estimator(ds, fam), 10000, ds, fam, {}, rng);
  const auto path = poisson_embed(chain.values, ds.rate(), ds.lambda(), rng);
  std::vector<double> scaled(chain.values);
  for (auto& v : scaled) v *= ds.lambda();
  const double hi = *std::max_element(scaled.begin(), scaled.end());
  const auto cfg = MetricConfig::fixed(0.0, hi, 512);
  const auto occ = occupation_measure(path, path.horizon(), cfg);
  CHECK(bl_distance(occ, bin_samples(scaled, cfg), cfg) < 0.02);
}

TEST_CASE("path CSV") {
  std::stringstream out;
  write_path_csv(out, SampledPath{0.5, {0.0, 0.25}});
  CHECK(out.str() == "t,h\n0,0\n0.5,0.25\n");
}
