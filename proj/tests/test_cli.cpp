#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include "mixchain/config.hpp"
#include "mixchain/errors.hpp"

using namespace mixchain;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() /
                   ("mixchain_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(MIXCHAIN_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

std::string parse_error(const std::string& text, const Overrides& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("diffusion defaults") {
  const auto cfg = parse_config("", {}, Command::Diffusion);
  CHECK(cfg.command == Command::Diffusion);
  CHECK(cfg.prior.alpha1 == 1.0);
  CHECK(cfg.fisher == 1.0);
  CHECK(cfg.z == 0.0);
  CHECK(cfg.T == 100.0);
  CHECK(cfg.dt == 1e-3);
}

TEST_CASE("epsilon rule n_pow") {
  const auto cfg = parse_config("epsilon=n_pow:-0.25\n");
  CHECK(cfg.epsilon.kind == EpsilonRule::Kind::NPow);
  CHECK(cfg.epsilon.at(10000) == doctest::Approx(0.1));
  CHECK(cfg.epsilon.at(16) == doctest::Approx(0.5));
}

TEST_CASE("flags override file values") {
  CHECK(parse_config("seed=42\n").seed == 42);
  CHECK(parse_config("seed=42\n", {{"seed", "7"}}).seed == 7);
}

TEST_CASE("comments, blank lines and lists") {
  const auto cfg = parse_config("# experiment\n\n  n_list = 10, 20 \nkernel=mh\n");
  CHECK(cfg.n_list == std::vector<std::size_t>{10, 20});
  CHECK(cfg.kernel.id() == KernelSpec::parse("imh-moment").id());
}

TEST_CASE("errors name the key and line") {
  const auto unknown = parse_error("seed=1\nbogus=3\n");
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);

  const auto bad = parse_error("n=12x\n");
  CHECK(bad.find("line 1") != std::string::npos);
  CHECK(bad.find("'n'") != std::string::npos);

  const auto no_eq = parse_error("seed\n");
  CHECK(no_eq.find("line 1") != std::string::npos);

  const auto flag = parse_error("", {{"dt", "abc"}});
  CHECK(flag.find("dt") != std::string::npos);
  CHECK(flag.find("command line") != std::string::npos);

  CHECK_FALSE(parse_error("epsilon=n_pow:x\n").empty());
  CHECK_FALSE(parse_error("family=cauchy\n").empty());
  CHECK_FALSE(parse_error("threads=0\n").empty());
}

TEST_CASE("metadata header round-trips") {
  auto cfg = parse_config("n=250\nepsilon=n_pow:-0.25\nkernel=imh-shift\nseed=99\n", {},
                          Command::Chain);
  std::stringstream header;
  write_metadata_header(header, cfg);
  const auto text = header.str();
  CHECK(text.rfind("# mixchain 1.0.0\n# command=chain\n", 0) == 0);
  CHECK(text.find("# seed=99\n") != std::string::npos);
  const auto back = config_from_output(header);
  for (const auto& key : config_keys()) {
    CAPTURE(key);
    CHECK(config_value(back, key) == config_value(cfg, key));
  }
  std::stringstream junk("iter,theta\n0,0.1\n");
  CHECK_THROWS_AS(config_from_output(junk), ParseError);
}

TEST_CASE("cli: reruns are byte-identical and inputs untouched") {
  const auto dir = scratch("rerun");
  const auto cfg_path = dir / "run.cfg";
  {
    std::ofstream(cfg_path) << "n=200\nm=300\nseed=5\nemit_scaled=true\n";
  }
  const auto before = slurp(cfg_path);
  REQUIRE(run("chain --config " + cfg_path.string() + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run("chain --config " + cfg_path.string() + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "chain.csv") == slurp(dir / "b" / "chain.csv"));
  CHECK(slurp(dir / "a" / "scaled.csv") == slurp(dir / "b" / "scaled.csv"));
  CHECK(slurp(cfg_path) == before);

  // gen then chain on the written data file.
  REQUIRE(run("gen --n 50 --seed 8 --out " + (dir / "g").string()) == 0);
  const auto data = dir / "g" / "dataset.csv";
  const auto data_before = slurp(data);
  REQUIRE(run("chain --m 20 --data " + data.string() + " --out " + (dir / "c").string()) == 0);
  CHECK(slurp(data) == data_before);
  CHECK(csv_rows(dir / "c" / "chain.csv").size() == 21);
}

TEST_CASE("cli: replay from an output header") {
  const auto dir = scratch("replay");
  REQUIRE(run("chain --kernel mh --n 150 --m 400 --seed 12 --emit-scaled --out " +
              (dir / "a").string()) == 0);
  REQUIRE(run("--from-output " + (dir / "a" / "chain.csv").string() + " --out " +
              (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "chain.csv") == slurp(dir / "b" / "chain.csv"));
  CHECK(slurp(dir / "a" / "scaled.csv") == slurp(dir / "b" / "scaled.csv"));

  REQUIRE(run("diffusion --T 2 --z 0.5 --seed 3 --out " + (dir / "d").string()) == 0);
  REQUIRE(run("--from-output " + (dir / "d" / "path.csv").string() + " --out " +
              (dir / "e").string()) == 0);
  CHECK(slurp(dir / "d" / "path.csv") == slurp(dir / "e" / "path.csv"));
}

TEST_CASE("cli: table has the n by m layout") {
  const auto dir = scratch("table");
  REQUIRE(run("table --replications 100 --m-list 100,200,300,400 --seed 1 --out " +
              dir.string()) == 0);
  const auto rows = csv_rows(dir / "se_table.csv");
  REQUIRE(rows.size() == 13);
  CHECK(rows[0] == std::vector<std::string>{"n", "m", "se", "mc_se", "replications"});
  std::set<std::string> ns, ms;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    ns.insert(rows[k][0]);
    ms.insert(rows[k][1]);
    CHECK(std::stod(rows[k][2]) > 0.0);
  }
  CHECK(ns == std::set<std::string>{"10", "100", "1000"});
  CHECK(ms.size() == 4);
}

TEST_CASE("cli: emitted scaled path") {
  const auto dir = scratch("scaled");
  REQUIRE(run("chain --kernel da --n 10000 --m 2000 --emit-scaled --seed 4 --out " +
              dir.string()) == 0);
  const auto theta = csv_rows(dir / "chain.csv");
  const auto scaled = csv_rows(dir / "scaled.csv");
  REQUIRE(theta.size() == 2001);
  REQUIRE(scaled.size() == 2001);
  CHECK(scaled[0][1] == "scaled");
  // scaled = sqrt(n) (theta - posterior mean): the offset is the same on every row.
  const double offset = std::stod(scaled[1][1]) - 100.0 * std::stod(theta[1][1]);
  for (std::size_t k = 2; k < theta.size(); ++k) {
    CHECK(std::stod(scaled[k][1]) - 100.0 * std::stod(theta[k][1]) ==
          doctest::Approx(offset).epsilon(1e-9));
  }
}

TEST_CASE("cli: failures exit nonzero") {
  const auto dir = scratch("fail");
  {
    std::ofstream(dir / "bad.cfg") << "bogus=1\n";
  }
  CHECK(run("chain --config " + (dir / "bad.cfg").string()) == 2);
  CHECK(run("nosuchcommand") != 0);
  CHECK(run("diffusion --dt 0.5 --out " + dir.string()) == 2);
  // h = 5 lies outside [0, lambda] for n = 4.
  CHECK(run("coeffs --n 4 --h-list 5 --reps 1000 --out " + dir.string()) == 1);
  CHECK(run("chain --data " + (dir / "missing.csv").string() + " --out " + dir.string()) != 0);
}
