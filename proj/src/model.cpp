#include "mixchain/model.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"

namespace mixchain {
namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return -0.5 * u * u - std::log(sd) - kLogSqrt2Pi;
}

double log_add_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_epsilon(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    throw DomainError("epsilon must lie in (0, 1], got " + format_double(eps));
  }
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0 && std::isfinite(sigma))) {
    throw DomainError("sigma must be positive, got " + format_double(sigma));
  }
}

}  // namespace

MixtureFamily MixtureFamily::location_normal(double eps, double sigma) {
  check_epsilon(eps);
  check_sigma(sigma);
  MixtureFamily f;
  f.kind_ = FamilyKind::LocationNormal;
  f.eps_ = eps;
  f.sigma_ = sigma;
  f.fisher_ = 1.0 / (sigma * sigma);
  return f;
}

MixtureFamily MixtureFamily::scale_normal(double eps, double sigma) {
  check_epsilon(eps);
  check_sigma(sigma);
  if (eps >= 1.0) {
    throw DomainError("scale-normal family needs epsilon < 1");
  }
  MixtureFamily f;
  f.kind_ = FamilyKind::ScaleNormal;
  f.eps_ = eps;
  f.sigma_ = sigma;
  f.fisher_ = 2.0;
  return f;
}

MixtureFamily MixtureFamily::custom(double eps, CustomFamily spec) {
  check_epsilon(eps);
  if (!spec.log_f0 || !spec.log_feps || !spec.score) {
    throw DomainError("custom family needs log_f0, log_feps and score");
  }
  if (!(spec.fisher > 0.0 && std::isfinite(spec.fisher))) {
    throw DomainError("custom family needs a positive Fisher information");
  }
  MixtureFamily f;
  f.kind_ = FamilyKind::Custom;
  f.eps_ = eps;
  f.sigma_ = 1.0;
  f.fisher_ = spec.fisher;
  f.custom_ = std::make_shared<const CustomFamily>(std::move(spec));
  return f;
}

MixtureFamily MixtureFamily::with_epsilon(double eps) const {
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return location_normal(eps, sigma_);
    case FamilyKind::ScaleNormal:
      return scale_normal(eps, sigma_);
    case FamilyKind::Custom:
      break;
  }
  check_epsilon(eps);
  MixtureFamily f = *this;
  f.eps_ = eps;
  return f;
}

std::string MixtureFamily::name() const {
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return "location";
    case FamilyKind::ScaleNormal:
      return "scale";
    case FamilyKind::Custom:
      return "custom";
  }
  return "unknown";
}

double MixtureFamily::log_f0(double x) const {
  if (kind_ == FamilyKind::Custom) return custom_->log_f0(x);
  return normal_logpdf(x, 0.0, sigma_);
}

double MixtureFamily::log_feps(double x) const {
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return normal_logpdf(x, eps_, sigma_);
    case FamilyKind::ScaleNormal:
      return normal_logpdf(x, 0.0, sigma_ * (1.0 - eps_));
    case FamilyKind::Custom:
      break;
  }
  return custom_->log_feps(x);
}

double MixtureFamily::log_ratio_at(double a, double x) const {
  const double s2 = sigma_ * sigma_;
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return (a * x - 0.5 * a * a) / s2;
    case FamilyKind::ScaleNormal: {
      const double shrink = 1.0 - a;
      return -std::log(shrink) -
             0.5 * x * x / s2 * (1.0 / (shrink * shrink) - 1.0);
    }
    case FamilyKind::Custom:
      break;
  }
  throw UnsupportedFamily("shifted components are only available for built-in families");
}

double MixtureFamily::log_ratio(double x) const {
  if (kind_ == FamilyKind::Custom) {
    return custom_->log_feps(x) - custom_->log_f0(x);
  }
  return log_ratio_at(eps_, x);
}

double MixtureFamily::score(double x) const {
  const double s2 = sigma_ * sigma_;
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return x / s2;
    case FamilyKind::ScaleNormal:
      return 1.0 - x * x / s2;
    case FamilyKind::Custom:
      break;
  }
  return custom_->score(x);
}

std::optional<ComponentMoments> MixtureFamily::moments() const {
  const double s2 = sigma_ * sigma_;
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return ComponentMoments{0.0, eps_, s2, s2};
    case FamilyKind::ScaleNormal:
      return ComponentMoments{0.0, 0.0, s2, s2 * (1.0 - eps_) * (1.0 - eps_)};
    case FamilyKind::Custom:
      break;
  }
  return custom_->moments;
}

double MixtureFamily::sample_component(bool eps_component, Rng& rng) const {
  switch (kind_) {
    case FamilyKind::LocationNormal:
      return (eps_component ? eps_ : 0.0) + sigma_ * rng.normal();
    case FamilyKind::ScaleNormal:
      return sigma_ * (eps_component ? 1.0 - eps_ : 1.0) * rng.normal();
    case FamilyKind::Custom:
      break;
  }
  const auto& sampler = eps_component ? custom_->sample_feps : custom_->sample_f0;
  if (!sampler) {
    throw UnsupportedFamily("custom family has no component sampler");
  }
  return sampler(rng);
}

FamilyPoint family_eval(const MixtureFamily& family, double theta, double x) {
  if (!std::isfinite(x)) throw DomainError("family_eval: x must be finite");
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError("family_eval: theta must lie in [0, 1], got " +
                      format_double(theta));
  }
  const double lf0 = family.log_f0(x);
  const double lfe = family.log_feps(x);
  double log_mix;
  if (theta == 0.0) {
    log_mix = lf0;
  } else if (theta == 1.0) {
    log_mix = lfe;
  } else {
    log_mix = log_add_exp(std::log1p(-theta) + lf0, std::log(theta) + lfe);
  }
  return {std::exp(lf0), std::exp(lfe), family.score(x), std::exp(log_mix),
          log_mix};
}

void PriorParams::validate() const {
  if (!(alpha1 > 0.0 && alpha0 > 0.0 && std::isfinite(alpha1) &&
        std::isfinite(alpha0))) {
    throw DomainError("prior parameters must be positive");
  }
}

double PriorParams::log_density(double theta) const {
  const double log_beta =
      std::lgamma(alpha1) + std::lgamma(alpha0) - std::lgamma(alpha1 + alpha0);
  double v = -log_beta;
  if (alpha1 != 1.0) v += (alpha1 - 1.0) * std::log(theta);
  if (alpha0 != 1.0) v += (alpha0 - 1.0) * std::log1p(-theta);
  return v;
}

Dataset Dataset::from_observations(const MixtureFamily& family,
                                   std::vector<double> x) {
  if (x.empty()) throw DomainError("dataset needs at least one observation");
  Dataset ds;
  ds.ratio_.reserve(x.size());
  double score_sum = 0.0;
  for (double xi : x) {
    if (!std::isfinite(xi)) throw CorruptDataset("non-finite observation");
    const double s = std::exp(family.log_ratio(xi));
    if (!(s > 0.0 && std::isfinite(s))) {
      throw CorruptDataset("likelihood ratio at x=" + format_double(xi) +
                           " is not positive and finite");
    }
    ds.ratio_.push_back(s);
    score_sum += family.score(xi);
    ds.sum_x_ += xi;
    ds.sum_x2_ += xi * xi;
  }
  const double n = static_cast<double>(x.size());
  ds.x_ = std::move(x);
  ds.eps_ = family.epsilon();
  ds.z_ = score_sum / std::sqrt(n);
  ds.lambda_ = ds.eps_ * std::sqrt(n);
  ds.rate_ = n / ds.lambda_;
  return ds;
}

Dataset sample_dataset(const MixtureFamily& family, double theta_true,
                       std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("sample_dataset: n must be positive");
  if (!(theta_true >= 0.0 && theta_true <= 1.0)) {
    throw DomainError("sample_dataset: theta_true must lie in [0, 1]");
  }
  std::vector<double> x(n);
  for (auto& xi : x) {
    const bool from_eps = rng.uniform() < theta_true;
    xi = family.sample_component(from_eps, rng);
  }
  return Dataset::from_observations(family, std::move(x));
}

double z_statistic(const Dataset& ds, const MixtureFamily& family) {
  double sum = 0.0;
  for (double xi : ds.x()) sum += family.score(xi);
  return sum / std::sqrt(static_cast<double>(ds.size()));
}

double moment_estimator(const Dataset& ds, const MixtureFamily& family) {
  const auto m = family.moments();
  if (!m) throw UnsupportedFamily("family exposes no component moments");
  const double n = static_cast<double>(ds.size());
  double estimate;
  const double mean_gap = m->mean_eps - m->mean0;
  if (std::abs(mean_gap) > 1e-12 * (1.0 + std::abs(m->mean0))) {
    estimate = (ds.sum_x() / n - m->mean0) / mean_gap;
  } else {
    const double second0 = m->var0 + m->mean0 * m->mean0;
    const double second_eps = m->var_eps + m->mean_eps * m->mean_eps;
    const double gap = second_eps - second0;
    if (std::abs(gap) <= 1e-12 * (1.0 + second0)) {
      throw UnsupportedFamily(
          "components share their first two moments; no moment estimator");
    }
    estimate = (ds.sum_x2() / n - second0) / gap;
  }
  return std::clamp(estimate, 0.0, 1.0);
}

double EpsilonRule::at(std::size_t n) const {
  if (kind == Kind::Fixed) return value;
  return std::pow(static_cast<double>(n), value);
}

std::string EpsilonRule::to_string() const {
  return (kind == Kind::Fixed ? "fixed:" : "n_pow:") + format_double(value);
}

EpsilonRule EpsilonRule::parse(const std::string& text) {
  const std::string_view t = trim(text);
  EpsilonRule rule;
  std::string_view number = t;
  if (t.starts_with("n_pow:")) {
    rule.kind = Kind::NPow;
    number = t.substr(6);
  } else if (t.starts_with("fixed:")) {
    number = t.substr(6);
  }
  if (!parse_double(number, rule.value)) {
    throw ParseError("malformed epsilon rule '" + std::string(t) + "'");
  }
  if (rule.kind == Kind::Fixed && !(rule.value > 0.0 && rule.value <= 1.0)) {
    throw ParseError("fixed epsilon must lie in (0, 1]");
  }
  if (rule.kind == Kind::NPow && !(rule.value <= 0.0 && rule.value > -0.5)) {
    throw ParseError("epsilon power must lie in (-1/2, 0]");
  }
  return rule;
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  out << "index,x\n";
  const auto x = ds.x();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << i << ',' << format_double(x[i]) << '\n';
  }
}

std::vector<double> read_dataset_csv(std::istream& in) {
  std::string line;
  std::vector<double> x;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      if (t != "index,x") throw ParseError("dataset CSV must start with 'index,x'");
      header_seen = true;
      continue;
    }
    const auto comma = t.find(',');
    double v = 0.0;
    if (comma == std::string_view::npos || !parse_double(t.substr(comma + 1), v)) {
      throw ParseError("dataset CSV line " + std::to_string(line_no) + " is malformed");
    }
    x.push_back(v);
  }
  return x;
}

void write_dataset_meta(std::ostream& out, const DatasetMeta& meta) {
  out << "family=" << meta.family << '\n'
      << "epsilon=" << format_double(meta.epsilon) << '\n'
      << "sigma=" << format_double(meta.sigma) << '\n'
      << "n=" << meta.n << '\n'
      << "seed=" << meta.seed << '\n'
      << "theta_true=" << format_double(meta.theta_true) << '\n';
}

DatasetMeta read_dataset_meta(std::istream& in) {
  DatasetMeta meta;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("metadata line without '='");
    const auto key = trim(t.substr(0, eq));
    const auto value = trim(t.substr(eq + 1));
    bool ok = true;
    std::uint64_t u = 0;
    if (key == "family") {
      meta.family = std::string(value);
    } else if (key == "epsilon") {
      ok = parse_double(value, meta.epsilon);
    } else if (key == "sigma") {
      ok = parse_double(value, meta.sigma);
    } else if (key == "n") {
      ok = parse_u64(value, u);
      meta.n = u;
    } else if (key == "seed") {
      ok = parse_u64(value, meta.seed);
    } else if (key == "theta_true") {
      ok = parse_double(value, meta.theta_true);
    } else {
      throw ParseError("unknown metadata key '" + std::string(key) + "'");
    }
    if (!ok) throw ParseError("malformed value for '" + std::string(key) + "'");
  }
  return meta;
}

}  // namespace mixchain
