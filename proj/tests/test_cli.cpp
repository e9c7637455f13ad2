#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "aml/cli.hpp"
#include "aml/errors.hpp"
#include "aml/io.hpp"

namespace fs = std::filesystem;
using aml::cli::ExperimentConfig;

namespace {

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / ("aml_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
};

const Scratch& scratch() {
  static Scratch s;
  return s;
}

std::string cli_path() {
  const char* p = std::getenv("AML_CLI");
  return p ? p : "aml";
}

// Runs the CLI binary and returns its exit status.
int aml_cmd(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + cli_path() + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("experiment config JSON round trip") {
  ExperimentConfig c;
  c.dynamics.beta = 3.25;
  c.dynamics.mode = aml::FlowMode::ascent;
  c.dynamics.seed = 99;
  c.dynamics.kernel_scale = aml::KernelScale::peak;
  c.dim = 3;
  c.n = 17;
  c.beta_list = {0.5, 1.0, 1e-3};
  c.output_dir = "out/x";
  c.perceptron = aml::sample_perceptron(3, 2, aml::Activation::gelu, 4);
  CHECK(ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump())) == c);
  c.perceptron.reset();
  c.perceptron_file = "theta.json";
  CHECK(ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump())) == c);
  c.perceptron_file.reset();
  const auto j = c.to_json();
  CHECK(j.at("perceptron").is_null());
  CHECK(ExperimentConfig::from_json(j) == c);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::array()), aml::ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"perceptron", 3}}), aml::ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"N", "many"}}), aml::ConfigError);
  ExperimentConfig bad;
  bad.n = 0;
  CHECK_THROWS_AS(bad.validate(), aml::ConfigError);
  bad = ExperimentConfig{};
  bad.init = "spiral";
  CHECK_THROWS_AS(bad.validate(), aml::ConfigError);
}

TEST_CASE("simulate: single particle converges and echoes its config") {
  const auto dir = scratch().root / "single";
  REQUIRE(aml_cmd("simulate -N 1 --beta 2 --seed 5 -o " + dir.string()) == 0);
  for (const char* f : {"trajectory.csv", "energy.csv", "final_state.csv", "clusters.json", "summary.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto summary = aml::io::read_json(dir / "summary.json");
  CHECK(summary.at("termination") == "converged");
  CHECK(summary.at("n_clusters") == 1);
  const auto echoed = ExperimentConfig::from_json(summary.at("config"));
  ExperimentConfig want;
  want.n = 1;
  want.dynamics.beta = 2.0;
  want.dynamics.seed = 5;
  want.output_dir = dir.string();
  CHECK(echoed == want);
  CHECK(ExperimentConfig::from_json(nlohmann::json::parse(echoed.to_json().dump())) == echoed);
  CHECK(slurp(dir / "energy.csv").rfind("step,energy,max_speed,n_clusters\n", 0) == 0);
  CHECK(slurp(dir / "trajectory.csv").rfind("step,atom,mass,theta\n", 0) == 0);
}

TEST_CASE("exit codes") {
  const auto r = scratch().root;
  CHECK(aml_cmd("simulate --beta 0 -N 4 -o " + (r / "bad").string()) == 1);
  CHECK(aml_cmd("simulate --beta -1 -N 4 -o " + (r / "bad").string()) == 1);
  CHECK(aml_cmd("simulate --mode sideways -o " + (r / "bad").string()) == 1);
  CHECK(aml_cmd("simulate --config " + (r / "missing.json").string()) == 1);
  CHECK(aml_cmd("frobnicate") == 1);
  CHECK(aml_cmd("simulate -N 50 --max-steps 20 --speed-tol 1e-12 -o " + (r / "budget").string()) == 2);
  CHECK(aml_cmd("analyze " + (r / "nowhere").string()) == 1);
  CHECK(aml_cmd("sweep -N 4 -o " + (r / "nolist").string()) == 1);
}

TEST_CASE("output root from the environment") {
  const auto root = scratch().root / "envroot";
  REQUIRE(aml_cmd("simulate -N 1", "AML_OUTPUT_DIR=" + root.string()) == 0);
  CHECK(fs::exists(root / "simulate" / "summary.json"));
}

TEST_CASE("sweeps are byte-deterministic across repeats and job counts") {
  const auto r = scratch().root;
  REQUIRE(aml_cmd("gen-theta -d 2 --activation gelu --seed 3 -o " + (r / "theta.json").string()) == 0);
  const std::string common = "sweep -N 64 --beta-list 1,4,9 --kernel-scale peak --max-steps 3000 --perceptron " +
                             (r / "theta.json").string();
  aml_cmd(common + " -j 1 -o " + (r / "s1").string());
  aml_cmd(common + " -j 1 -o " + (r / "s2").string());
  aml_cmd(common + " -j 3 -o " + (r / "s3").string());
  const auto a = slurp(r / "s1" / "sweep.csv");
  CHECK(a.rfind("beta,sqrt_beta,n_clusters,largest_mass,energy_final,terminated\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 4);
  CHECK(a == slurp(r / "s2" / "sweep.csv"));
  CHECK(a == slurp(r / "s3" / "sweep.csv"));
  const auto m = slurp(r / "s1" / "masses.csv");
  CHECK(m.rfind("beta,sqrt_beta,cluster,mass,limit_bound,finite_bound\n", 0) == 0);
  CHECK(m == slurp(r / "s2" / "masses.csv"));
  CHECK(m == slurp(r / "s3" / "masses.csv"));
  for (const char* sub : {"beta_000_1", "beta_001_4", "beta_002_9"}) {
    CHECK(slurp(r / "s1" / sub / "final_state.csv") == slurp(r / "s3" / sub / "final_state.csv"));
  }
  const auto echo = aml::io::read_json(r / "s1" / "sweep_config.json");
  CHECK(echo.at("beta_list").size() == 3);
}

TEST_CASE("analyze a converged descent run") {
  const auto r = scratch().root;
  REQUIRE(aml_cmd("gen-theta -d 2 --activation gelu --seed 8 -o " + (r / "theta8.json").string()) == 0);
  const auto dir = r / "converged";
  REQUIRE(aml_cmd("simulate -N 64 --beta 4 --kernel-scale peak --speed-tol 1e-7 --perceptron " +
                  (r / "theta8.json").string() + " -o " + dir.string()) == 0);
  const int rc = aml_cmd("analyze " + dir.string() + " --checks hessian,spectrum,extrema");
  const auto a = aml::io::read_json(dir / "analysis.json");
  CHECK(a.at("checks").at("hessian").at("pass") == true);
  CHECK(a.at("checks").at("spectrum").at("pass") == true);
  CHECK(a.at("checks").at("extrema").at("pass") == true);
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "hessian.csv"));
  CHECK(aml_cmd("analyze " + dir.string() + " --checks curvature") == 1);
}

TEST_CASE("analyze flags a fabricated mass-1 atom at beta = 100") {
  const auto dir = scratch().root / "fabricated";
  fs::create_directories(dir);
  ExperimentConfig c;
  c.n = 1;
  c.dynamics.beta = 100.0;
  c.dynamics.kernel_scale = aml::KernelScale::peak;
  aml::io::write_json(dir / "summary.json", {{"config", c.to_json()}, {"perceptron_params", nullptr}});
  aml::io::write_text(dir / "final_state.csv", "idx,mass,x0,x1\n0,1,1,0\n");
  CHECK(aml_cmd("analyze " + dir.string() + " --checks bounds") == 3);
  const auto a = aml::io::read_json(dir / "analysis.json");
  const auto& b = a.at("checks").at("bounds");
  CHECK(b.at("pass") == false);
  CHECK(b.at("clusters").at(0).at("within_limit") == false);
}

TEST_CASE("extrema and gen-theta subcommands") {
  const auto r = scratch().root;
  aml::io::write_json(r / "diag.json", nlohmann::json::parse(
      R"({"activation":"relu","neurons":[{"a":[2,0],"omega":1},{"a":[0,1],"omega":1}]})"));
  REQUIRE(aml_cmd("extrema --perceptron " + (r / "diag.json").string() + " --beta 1 -o " + (r / "mx.json").string()) == 0);
  const auto mx = aml::io::read_json(r / "mx.json");
  CHECK(mx.at("value").get<double>() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(aml_cmd("extrema --perceptron " + (r / "nope.json").string()) == 1);
  REQUIRE(aml_cmd("gen-theta -d 3 --count 5 --seed 11 -o " + (r / "g1.json").string()) == 0);
  REQUIRE(aml_cmd("gen-theta -d 3 --count 5 --seed 11 -o " + (r / "g2.json").string()) == 0);
  CHECK(slurp(r / "g1.json") == slurp(r / "g2.json"));
  const auto p = aml::perceptron_from_json(aml::io::read_json(r / "g1.json"));
  CHECK(p.neurons.size() == 5);
  CHECK(p.dim() == 3);
  CHECK(aml_cmd("gen-theta --activation tanh -o " + (r / "g3.json").string()) == 1);
}
