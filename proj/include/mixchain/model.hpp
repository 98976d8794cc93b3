#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixchain/rng.hpp"

namespace mixchain {

enum class FamilyKind { LocationNormal, ScaleNormal, Custom };

/// First two moments of the two mixture components.
struct ComponentMoments {
  double mean0 = 0.0;
  double mean_eps = 0.0;
  double var0 = 0.0;
  double var_eps = 0.0;
};

/// User-supplied two-component family. The score g and Fisher information
/// are mandatory: they are never obtained by numerical differentiation.
struct CustomFamily {
  std::function<double(double)> log_f0;
  std::function<double(double)> log_feps;
  std::function<double(double)> score;
  double fisher = 0.0;
  std::optional<ComponentMoments> moments;
  /// Optional component samplers, needed only for synthetic data.
  std::function<double(Rng&)> sample_f0;
  std::function<double(Rng&)> sample_feps;
};

/// The simple mixture p(dx|theta) = (1-theta) F_0(dx) + theta F_eps(dx).
class MixtureFamily {
 public:
  /// F_0 = N(0, sigma^2), F_eps = N(eps, sigma^2).
  static MixtureFamily location_normal(double eps, double sigma = 1.0);
  /// F_0 = N(0, sigma^2), F_eps = N(0, sigma^2 (1-eps)^2); needs eps < 1.
  static MixtureFamily scale_normal(double eps, double sigma = 1.0);
  static MixtureFamily custom(double eps, CustomFamily spec);

  FamilyKind kind() const noexcept { return kind_; }
  double epsilon() const noexcept { return eps_; }
  double sigma() const noexcept { return sigma_; }
  std::string name() const;

  double log_f0(double x) const;
  double log_feps(double x) const;
  /// log(f_eps(x) / f_0(x)).
  double log_ratio(double x) const;
  /// The local score g.
  double score(double x) const;
  double fisher() const noexcept { return fisher_; }
  std::optional<ComponentMoments> moments() const;

  /// log f_a(x) - log f_0(x) for the component at parameter a in [0, eps],
  /// i.e. the family with eps replaced by a. Built-in families only.
  double log_ratio_at(double a, double x) const;

  /// Draw from F_0 (eps_component = false) or F_eps.
  double sample_component(bool eps_component, Rng& rng) const;

  /// Same family with a different eps (the score is re-derived for
  /// built-ins; custom families keep their callables).
  MixtureFamily with_epsilon(double eps) const;

 private:
  MixtureFamily() = default;

  FamilyKind kind_ = FamilyKind::LocationNormal;
  double eps_ = 1.0;
  double sigma_ = 1.0;
  double fisher_ = 1.0;
  std::shared_ptr<const CustomFamily> custom_;
};

struct FamilyPoint {
  double f0;
  double feps;
  double g;
  double mix;
  double log_mix;
};

/// Component densities, score and mixture density at (theta, x).
FamilyPoint family_eval(const MixtureFamily& family, double theta, double x);

/// Beta(alpha1, alpha0) prior on theta.
struct PriorParams {
  double alpha1 = 1.0;
  double alpha0 = 1.0;

  void validate() const;
  /// Normalized log prior density at theta in [0, 1].
  double log_density(double theta) const;
};

/// Observations together with the per-observation likelihood ratios
/// s_i = f_eps(x_i)/f_0(x_i) and the scaling constants
/// lambda_n = eps sqrt(n), r_n = n / lambda_n.
class Dataset {
 public:
  static Dataset from_observations(const MixtureFamily& family,
                                   std::vector<double> x);

  std::size_t size() const noexcept { return x_.size(); }
  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> ratio() const noexcept { return ratio_; }
  double z() const noexcept { return z_; }
  double lambda() const noexcept { return lambda_; }
  double rate() const noexcept { return rate_; }
  double epsilon() const noexcept { return eps_; }
  double sum_x() const noexcept { return sum_x_; }
  double sum_x2() const noexcept { return sum_x2_; }
  double mean() const noexcept { return sum_x_ / static_cast<double>(size()); }

 private:
  Dataset() = default;

  std::vector<double> x_;
  std::vector<double> ratio_;
  double z_ = 0.0;
  double lambda_ = 0.0;
  double rate_ = 0.0;
  double eps_ = 0.0;
  double sum_x_ = 0.0;
  double sum_x2_ = 0.0;
};

/// n draws from the mixture at theta_true.
Dataset sample_dataset(const MixtureFamily& family, double theta_true,
                       std::size_t n, Rng& rng);

/// n^{-1/2} sum g(x_i), recomputed from the observations.
double z_statistic(const Dataset& ds, const MixtureFamily& family);

/// Matching-moment estimate of theta, clamped to [0, 1]. Uses the first
/// moment when the component means differ and the second moment otherwise.
double moment_estimator(const Dataset& ds, const MixtureFamily& family);

/// Rule mapping a sample size to eps: fixed value or n^power.
struct EpsilonRule {
  enum class Kind { Fixed, NPow };
  Kind kind = Kind::Fixed;
  double value = 1.0;

  double at(std::size_t n) const;
  std::string to_string() const;
  static EpsilonRule parse(const std::string& text);
};

struct DatasetMeta {
  std::string family;
  double epsilon = 1.0;
  double sigma = 1.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double theta_true = 0.0;
};

/// CSV with header `index,x`.
void write_dataset_csv(std::ostream& out, const Dataset& ds);
std::vector<double> read_dataset_csv(std::istream& in);
/// Plain `key=value` sidecar.
void write_dataset_meta(std::ostream& out, const DatasetMeta& meta);
DatasetMeta read_dataset_meta(std::istream& in);

}  // namespace mixchain
