// mixchain: command-line front end for the mixture MCMC experiments.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mixchain/config.hpp"
#include "mixchain/errors.hpp"

namespace {

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

const char* help_for(const std::string& key) {
  static const std::map<std::string, const char*> help = {
      {"family", "location | scale"},
      {"epsilon", "fixed:<v> | n_pow:<p> | <v>"},
      {"kernel", "da | imh-moment (mh) | imh-shift"},
      {"init", "chain start: moment | proposal"},
      {"data", "read observations from an index,x CSV"},
      {"replications", "per-row replications; 0 = 1000 for n<=100, 200 above"},
      {"sde_init", "stationary | fixed:<h0>"},
      {"risk_kernel", "da | imh | iid"},
      {"T", "diffusion horizon"},
      {"seed", "master seed (unsigned 64-bit)"},
      {"out", "output directory"},
      {"threads", "worker threads (results do not depend on it)"},
  };
  const auto it = help.find(key);
  return it == help.end() ? "" : it->second;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixture-model MCMC experiments: samplers, diffusion limit, risk diagnostics"};
  app.set_version_flag("--version", std::string("mixchain ") + mixchain::kVersion);

  std::string command, config_path, from_output;
  app.add_option("command", command, "gen|chain|table|coeffs|bvm|lan|diffusion|risk");
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--from-output", from_output,
                 "replay the run recorded in an output file's header")
      ->check(CLI::ExistingFile);

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool emit_scaled = false;
  for (const auto& key : mixchain::config_keys()) {
    if (key == "emit_scaled") {
      options[key] = app.add_flag("--emit-scaled", emit_scaled, "also write scaled.csv");
      continue;
    }
    options[key] = app.add_option("--" + dashed(key), values[key], help_for(key));
  }

  CLI11_PARSE(app, argc, argv);

  mixchain::Overrides overrides;
  for (const auto& key : mixchain::config_keys()) {
    if (options[key]->count() == 0) continue;
    overrides.emplace_back(key, key == "emit_scaled" ? (emit_scaled ? "true" : "false")
                                                     : values[key]);
  }

  try {
    mixchain::ExperimentConfig cfg;
    if (!from_output.empty()) {
      if (!config_path.empty()) {
        std::cerr << "mixchain: --config and --from-output are exclusive\n";
        return 2;
      }
      std::ifstream in(from_output);
      cfg = mixchain::config_from_output(in, overrides);
      if (!command.empty() && mixchain::parse_command(command) != cfg.command) {
        std::cerr << "mixchain: command '" << command << "' differs from recorded '"
                  << mixchain::to_string(cfg.command) << "'\n";
        return 2;
      }
    } else {
      if (command.empty()) {
        std::cerr << "mixchain: a command is required\n" << app.help();
        return 2;
      }
      std::string text;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
      }
      cfg = mixchain::parse_config(text, overrides, mixchain::parse_command(command));
      cfg.command = mixchain::parse_command(command);
    }
    for (const auto& path : mixchain::dispatch(cfg, std::cout)) {
      std::cout << "wrote " << path << '\n';
    }
  } catch (const mixchain::ParseError& e) {
    std::cerr << "mixchain: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mixchain: " << (command.empty() ? "replay" : command) << ": " << e.what()
              << '\n';
    return 1;
  }
  return 0;
}
