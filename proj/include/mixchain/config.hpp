#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mixchain/model.hpp"
#include "mixchain/samplers.hpp"

namespace mixchain {

inline constexpr const char* kVersion = "1.0.0";

enum class Command { Gen, Chain, Table, Coeffs, Bvm, Lan, Diffusion, Risk };

std::string to_string(Command c);
Command parse_command(const std::string& text);

/// Fully resolved experiment description. Every field has a default, so an
/// empty file is a valid config for every command.
struct ExperimentConfig {
  Command command = Command::Gen;

  // model
  std::string family = "location";  // location | scale
  double sigma = 1.0;
  EpsilonRule epsilon{};
  PriorParams prior{};
  double theta_true = 0.0;
  std::string data;  // optional `index,x` CSV used instead of a synthetic dataset

  // sizes
  std::size_t n = 100;
  std::size_t m = 1000;
  std::vector<std::size_t> n_list{10, 100, 1000};
  std::vector<std::size_t> m_list{100, 1000, 10000, 100000};
  std::size_t replications = 0;  // 0: 1000 for n <= 100, 200 above

  // samplers
  KernelSpec kernel{};
  std::string init = "moment";  // moment | proposal
  bool emit_scaled = false;

  // metric and quadrature
  std::size_t grid_size = 512;
  double cap = 1.0;
  std::size_t posterior_points = 2048;

  // coefficients
  std::vector<double> h_list{0.5, 1.0, 2.0};
  std::size_t reps = 100000;

  // bvm / lan
  std::size_t datasets = 1;
  double tail_threshold = 10.0;
  double h_max = 3.0;
  std::size_t lan_grid = 301;

  // diffusion (alpha1 is shared with the prior)
  double z = 0.0;
  double fisher = 1.0;
  double T = 100.0;
  double dt = 1e-3;
  std::size_t stride = 10;
  std::string sde_init = "stationary";  // stationary | fixed:<h0>

  // risk
  std::string risk_kernel = "da";  // da | imh | iid
  std::size_t chains = 20;

  // run control (never echoed: they cannot change results)
  std::uint64_t seed = 0;
  std::string out = ".";
  std::size_t threads = 1;

  MixtureFamily make_family(double eps) const;
};

/// (key, value) pairs applied after the file, in order.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Names of every recognized key, in header order.
const std::vector<std::string>& config_keys();

/// Parses `key=value` lines (blank lines and `#` comments skipped), then
/// applies the overrides. `command=` may appear in the text; otherwise
/// `command` is kept. Unknown keys and malformed or out-of-range values throw
/// ParseError naming the key and the line (line 0 for overrides).
ExperimentConfig parse_config(const std::string& text, const Overrides& overrides = {},
                              Command command = Command::Gen);

/// Reads the `#` metadata block of a previous output back into a config.
ExperimentConfig config_from_output(std::istream& in, const Overrides& overrides = {});

/// Resolved value of one key as text.
std::string config_value(const ExperimentConfig& cfg, const std::string& key);

/// `# mixchain <version>`, `# command=...`, then `# key=value` for every
/// echoed key.
void write_metadata_header(std::ostream& out, const ExperimentConfig& cfg);

/// Runs the experiment, writing outputs under cfg.out and a short summary to
/// `log`. Returns the paths written.
std::vector<std::string> dispatch(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace mixchain
