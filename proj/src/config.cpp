#include "mixchain/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mixchain/errors.hpp"
#include "mixchain/format.hpp"

namespace mixchain {
namespace {

// Setters throw std::invalid_argument with a short reason; the caller adds
// the key and line.
struct KeyDef {
  std::string name;
  bool echoed;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

[[noreturn]] void bad(const std::string& why) { throw std::invalid_argument(why); }

double to_double(const std::string& v) {
  double out = 0.0;
  if (!parse_double(v, out) || !std::isfinite(out)) bad("expected a finite number");
  return out;
}

double positive(const std::string& v) {
  const double d = to_double(v);
  if (!(d > 0.0)) bad("must be > 0");
  return d;
}

std::size_t to_size(const std::string& v, std::size_t min_value = 0) {
  std::uint64_t out = 0;
  if (!parse_u64(v, out)) bad("expected a nonnegative integer");
  if (out < min_value) bad("must be >= " + std::to_string(min_value));
  return static_cast<std::size_t>(out);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string_view rest = v;
  for (;;) {
    const auto comma = rest.find(',');
    parts.emplace_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (parts.empty() || std::any_of(parts.begin(), parts.end(),
                                   [](const auto& p) { return p.empty(); })) {
    bad("expected a comma-separated list");
  }
  return parts;
}

std::vector<std::size_t> to_size_list(const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(v)) out.push_back(to_size(p, 1));
  return out;
}

std::vector<double> to_double_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& p : split_list(v)) out.push_back(to_double(p));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad("expected true or false");
}

#define MC_DOUBLE(key, field, check)                                              \
  KeyDef {                                                                        \
    #key, true, [](ExperimentConfig& c, const std::string& v) { c.field = check(v); }, \
        [](const ExperimentConfig& c) { return format_double(c.field); }          \
  }
#define MC_SIZE(key, field, min_value)                                            \
  KeyDef {                                                                        \
    #key, true,                                                                   \
        [](ExperimentConfig& c, const std::string& v) { c.field = to_size(v, min_value); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }         \
  }

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> keys = {
      {"family", true,
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "location" && v != "scale") bad("expected location or scale");
         c.family = v;
       },
       [](const ExperimentConfig& c) { return c.family; }},
      MC_DOUBLE(sigma, sigma, positive),
      {"epsilon", true,
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.epsilon = EpsilonRule::parse(v);
         } catch (const std::exception& e) {
           bad(e.what());
         }
       },
       [](const ExperimentConfig& c) { return c.epsilon.to_string(); }},
      {"alpha1", true,
       [](ExperimentConfig& c, const std::string& v) { c.prior.alpha1 = positive(v); },
       [](const ExperimentConfig& c) { return format_double(c.prior.alpha1); }},
      {"alpha0", true,
       [](ExperimentConfig& c, const std::string& v) { c.prior.alpha0 = positive(v); },
       [](const ExperimentConfig& c) { return format_double(c.prior.alpha0); }},
      {"theta_true", true,
       [](ExperimentConfig& c, const std::string& v) {
         const double t = to_double(v);
         if (t < 0.0 || t > 1.0) bad("must lie in [0, 1]");
         c.theta_true = t;
       },
       [](const ExperimentConfig& c) { return format_double(c.theta_true); }},
      {"data", true, [](ExperimentConfig& c, const std::string& v) { c.data = v; },
       [](const ExperimentConfig& c) { return c.data; }},
      MC_SIZE(n, n, 1),
      MC_SIZE(m, m, 1),
      {"n_list", true,
       [](ExperimentConfig& c, const std::string& v) { c.n_list = to_size_list(v); },
       [](const ExperimentConfig& c) { return join(c.n_list); }},
      {"m_list", true,
       [](ExperimentConfig& c, const std::string& v) { c.m_list = to_size_list(v); },
       [](const ExperimentConfig& c) { return join(c.m_list); }},
      {"replications", true,
       [](ExperimentConfig& c, const std::string& v) {
         const auto r = to_size(v);
         if (r != 0 && r < 100) bad("must be 0 (default) or >= 100");
         c.replications = r;
       },
       [](const ExperimentConfig& c) { return std::to_string(c.replications); }},
      {"kernel", true,
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.kernel = KernelSpec::parse(v);
         } catch (const std::exception& e) {
           bad(e.what());
         }
       },
       [](const ExperimentConfig& c) { return c.kernel.id(); }},
      {"init", true,
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "moment" && v != "proposal") bad("expected moment or proposal");
         c.init = v;
       },
       [](const ExperimentConfig& c) { return c.init; }},
      {"emit_scaled", true,
       [](ExperimentConfig& c, const std::string& v) { c.emit_scaled = to_bool(v); },
       [](const ExperimentConfig& c) { return std::string(c.emit_scaled ? "true" : "false"); }},
      MC_SIZE(grid_size, grid_size, 2),
      MC_DOUBLE(cap, cap, positive),
      MC_SIZE(posterior_points, posterior_points, 64),
      {"h_list", true,
       [](ExperimentConfig& c, const std::string& v) {
         auto h = to_double_list(v);
         if (std::any_of(h.begin(), h.end(), [](double x) { return x < 0.0; })) {
           bad("entries must be >= 0");
         }
         c.h_list = std::move(h);
       },
       [](const ExperimentConfig& c) { return join(c.h_list); }},
      MC_SIZE(reps, reps, 1000),
      MC_SIZE(datasets, datasets, 1),
      MC_DOUBLE(tail_threshold, tail_threshold, positive),
      MC_DOUBLE(h_max, h_max, positive),
      MC_SIZE(lan_grid, lan_grid, 1),
      MC_DOUBLE(z, z, to_double),
      MC_DOUBLE(fisher, fisher, positive),
      MC_DOUBLE(T, T, positive),
      {"dt", true,
       [](ExperimentConfig& c, const std::string& v) {
         const double d = positive(v);
         if (d > 0.01) bad("must be <= 0.01");
         c.dt = d;
       },
       [](const ExperimentConfig& c) { return format_double(c.dt); }},
      MC_SIZE(stride, stride, 1),
      {"sde_init", true,
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "stationary") {
           if (v.rfind("fixed:", 0) != 0) bad("expected stationary or fixed:<h0>");
           if (to_double(v.substr(6)) < 0.0) bad("h0 must be >= 0");
         }
         c.sde_init = v;
       },
       [](const ExperimentConfig& c) { return c.sde_init; }},
      {"risk_kernel", true,
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "da" && v != "imh" && v != "iid") bad("expected da, imh or iid");
         c.risk_kernel = v;
       },
       [](const ExperimentConfig& c) { return c.risk_kernel; }},
      MC_SIZE(chains, chains, 1),
      {"seed", true,
       [](ExperimentConfig& c, const std::string& v) {
         std::uint64_t s = 0;
         if (!parse_u64(v, s)) bad("expected an unsigned 64-bit integer");
         c.seed = s;
       },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {"out", false, [](ExperimentConfig& c, const std::string& v) { c.out = v; },
       [](const ExperimentConfig& c) { return c.out; }},
      {"threads", false,
       [](ExperimentConfig& c, const std::string& v) { c.threads = to_size(v, 1); },
       [](const ExperimentConfig& c) { return std::to_string(c.threads); }},
  };
  return keys;
}

#undef MC_DOUBLE
#undef MC_SIZE

const KeyDef* find_key(const std::string& name) {
  for (const auto& k : registry()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void apply(ExperimentConfig& cfg, const std::string& key, const std::string& value,
           std::size_t line) {
  const std::string where = line == 0 ? "command line" : "line " + std::to_string(line);
  if (key == "command") {
    try {
      cfg.command = parse_command(value);
    } catch (const ParseError&) {
      throw ParseError(where + ": key 'command': unknown command '" + value + "'");
    }
    return;
  }
  const KeyDef* def = find_key(key);
  if (def == nullptr) throw ParseError(where + ": unknown key '" + key + "'");
  try {
    def->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ParseError(where + ": key '" + key + "': invalid value '" + value + "' (" +
                     e.what() + ")");
  }
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Gen: return "gen";
    case Command::Chain: return "chain";
    case Command::Table: return "table";
    case Command::Coeffs: return "coeffs";
    case Command::Bvm: return "bvm";
    case Command::Lan: return "lan";
    case Command::Diffusion: return "diffusion";
    case Command::Risk: return "risk";
  }
  return "gen";
}

Command parse_command(const std::string& text) {
  for (auto c : {Command::Gen, Command::Chain, Command::Table, Command::Coeffs, Command::Bvm,
                 Command::Lan, Command::Diffusion, Command::Risk}) {
    if (to_string(c) == text) return c;
  }
  throw ParseError("unknown command '" + text + "'");
}

MixtureFamily ExperimentConfig::make_family(double eps) const {
  if (family == "scale") return MixtureFamily::scale_normal(eps, sigma);
  return MixtureFamily::location_normal(eps, sigma);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& k : registry()) v.push_back(k.name);
    return v;
  }();
  return names;
}

ExperimentConfig parse_config(const std::string& text, const Overrides& overrides,
                              Command command) {
  ExperimentConfig cfg;
  cfg.command = command;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line) + ": expected key=value, got '" +
                       std::string(t) + "'");
    }
    const std::string key(trim(t.substr(0, eq)));
    if (key.empty()) throw ParseError("line " + std::to_string(line) + ": missing key");
    apply(cfg, key, std::string(trim(t.substr(eq + 1))), line);
  }
  for (const auto& [key, value] : overrides) apply(cfg, key, value, 0);
  return cfg;
}

ExperimentConfig config_from_output(std::istream& in, const Overrides& overrides) {
  std::string raw, text;
  bool has_command = false, has_version = false;
  while (std::getline(in, raw)) {
    if (raw.empty() || raw.front() != '#') break;
    auto body = trim(std::string_view(raw).substr(1));
    if (body.rfind("mixchain ", 0) == 0) {
      has_version = true;
      continue;
    }
    if (body.rfind("command=", 0) == 0) has_command = true;
    text.append(body).push_back('\n');
  }
  if (!has_version) throw ParseError("not a mixchain output: missing '# mixchain' line");
  if (!has_command) throw ParseError("metadata header: missing required key 'command'");
  return parse_config(text, overrides);
}

std::string config_value(const ExperimentConfig& cfg, const std::string& key) {
  if (key == "command") return to_string(cfg.command);
  const KeyDef* def = find_key(key);
  if (def == nullptr) throw ParseError("unknown key '" + key + "'");
  return def->get(cfg);
}

void write_metadata_header(std::ostream& out, const ExperimentConfig& cfg) {
  out << "# mixchain " << kVersion << '\n';
  out << "# command=" << to_string(cfg.command) << '\n';
  for (const auto& k : registry()) {
    if (k.echoed) out << "# " << k.name << '=' << k.get(cfg) << '\n';
  }
}

}  // namespace mixchain
