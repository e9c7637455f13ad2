#include "aml/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "aml/attention.hpp"
#include "aml/clusters.hpp"
#include "aml/errors.hpp"
#include "aml/extrema.hpp"
#include "aml/io.hpp"
#include "aml/spectral.hpp"

namespace fs = std::filesystem;

namespace aml::cli {

namespace {

std::mutex log_mutex;

void log(const std::string& msg) {
  std::lock_guard<std::mutex> lock(log_mutex);
  std::cerr << msg << '\n';
}

struct RunRecord {
  double beta;
  Termination reason;
  std::size_t steps;
  double final_energy;
  double final_speed;
  ClusterReport clusters;   // detection threshold
  ClusterReport thm5;       // interaction scale
  double finite_bound;
  double limit;
};

double attention_scale(const DynamicsConfig& d) { return d.kernel().scale_factor(); }

RunRecord execute(const ExperimentConfig& cfg, const std::optional<PerceptronParams>& params) {
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  const PerceptronParams* pp = params ? &*params : nullptr;
  const Ensemble init = uniform_init(cfg.n, cfg.dim, cfg.dynamics.seed);
  const auto res = run(cfg.dynamics, init, pp);
  const double beta = cfg.dynamics.beta;

  {
    std::ofstream f(out / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(f, res, init.masses(), cfg.dim);
  }
  {
    std::ostringstream s;
    s << "step,energy,max_speed,n_clusters\n";
    for (const auto& sn : res.snapshots) {
      s << sn.step << ',' << io::format_double(sn.energy) << ',' << io::format_double(sn.max_speed) << ','
        << sn.n_clusters << '\n';
    }
    io::write_text(out / "energy.csv", s.str());
  }
  {
    std::ofstream f(out / "final_state.csv", std::ios::binary);
    write_ensemble_csv(f, res.final_state);
  }
  RunRecord rec{beta,
                res.reason,
                res.steps,
                res.final_energy,
                res.final_speed,
                detect(res.final_state, beta),
                detect_at(res.final_state, beta, interaction_scale(beta)),
                mass_bound(beta, 0.5, pp ? c_theta(*pp) : 0.0, attention_scale(cfg.dynamics)),
                mass_bound_limit(0.5)};
  io::write_json(out / "clusters.json", rec.clusters.to_json());
  nlohmann::json summary = {{"config", cfg.to_json()},
                            {"perceptron_params", params ? to_json(*params) : nlohmann::json(nullptr)},
                            {"termination", to_string(res.reason)},
                            {"steps", res.steps},
                            {"final_speed", res.final_speed},
                            {"final_energy", res.final_energy},
                            {"n_clusters", rec.clusters.clusters.size()},
                            {"largest_mass", rec.clusters.largest_mass()},
                            {"clusters", rec.clusters.to_json()}};
  io::write_json(out / "summary.json", summary);
  return rec;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log(std::string("invalid configuration: ") + e.what());
  } catch (const DomainError& e) {
    log(std::string("invalid input: ") + e.what());
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
  }
  return ExitCode::invalid;
}

std::string beta_dir(std::size_t idx, double beta) {
  std::ostringstream s;
  s << "beta_" << std::setw(3) << std::setfill('0') << idx << '_' << io::format_double(beta);
  return s.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  dynamics.validate();
  if (dim < 2) throw ConfigError("d must be at least 2");
  if (n < 1) throw ConfigError("N must be at least 1");
  if (init != "uniform_seeded") throw ConfigError("unknown init '" + init + "'");
  for (double b : beta_list) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("beta_list entries must be positive");
  }
  if (auto p = resolve_perceptron(); p && p->dim() != dim) {
    throw ConfigError("perceptron dimension does not match d");
  }
}

std::optional<PerceptronParams> ExperimentConfig::resolve_perceptron() const {
  if (perceptron) return perceptron;
  if (perceptron_file) return perceptron_from_json(io::read_json(*perceptron_file));
  return std::nullopt;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = dynamics.to_json();
  j["d"] = dim;
  j["N"] = n;
  j["init"] = init;
  if (perceptron) {
    j["perceptron"] = aml::to_json(*perceptron);
  } else if (perceptron_file) {
    j["perceptron"] = *perceptron_file;
  } else {
    j["perceptron"] = nullptr;
  }
  j["beta_list"] = beta_list;
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.dynamics = DynamicsConfig::from_json(j);
  try {
    c.dim = j.value("d", c.dim);
    c.n = j.value("N", c.n);
    c.init = j.value("init", c.init);
    if (j.contains("perceptron")) {
      const auto& p = j.at("perceptron");
      if (p.is_string()) {
        c.perceptron_file = p.get<std::string>();
      } else if (p.is_object()) {
        c.perceptron = perceptron_from_json(p);
      } else if (!p.is_null()) {
        throw ConfigError("perceptron must be null, a path or an object");
      }
    }
    c.beta_list = j.value("beta_list", c.beta_list);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

fs::path default_output_root() {
  if (const char* env = std::getenv("AML_OUTPUT_DIR"); env && *env) return env;
  return "runs";
}

int cmd_simulate(const ExperimentConfig& config) {
  return guarded([&] {
    config.validate();
    ExperimentConfig cfg = config;
    if (cfg.output_dir.empty()) cfg.output_dir = (default_output_root() / "simulate").string();
    const auto rec = execute(cfg, cfg.resolve_perceptron());
    log("simulate: beta=" + io::format_double(rec.beta) + " " + to_string(rec.reason) + " after " +
        std::to_string(rec.steps) + " steps, " + std::to_string(rec.clusters.clusters.size()) + " clusters");
    return rec.reason == Termination::converged ? ExitCode::ok : ExitCode::budget;
  });
}

int cmd_sweep(const ExperimentConfig& config, std::size_t jobs) {
  return guarded([&] {
    config.validate();
    if (config.beta_list.empty()) throw ConfigError("sweep needs a nonempty beta_list");
    const fs::path root = config.output_dir.empty() ? default_output_root() / "sweep" : fs::path(config.output_dir);
    fs::create_directories(root);
    const auto params = config.resolve_perceptron();
    const std::size_t count = config.beta_list.size();
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, count);
    const int inner_threads = std::max(1, omp_get_max_threads() / static_cast<int>(jobs));

    std::vector<std::optional<RunRecord>> records(count);
    std::vector<std::string> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      omp_set_num_threads(inner_threads);
      for (std::size_t i = next++; i < count; i = next++) {
        ExperimentConfig sub = config;
        sub.dynamics.beta = config.beta_list[i];
        sub.beta_list = {config.beta_list[i]};
        sub.output_dir = (root / beta_dir(i, config.beta_list[i])).string();
        try {
          records[i] = execute(sub, params);
          log("sweep: beta=" + io::format_double(sub.dynamics.beta) + " " + to_string(records[i]->reason) +
              " after " + std::to_string(records[i]->steps) + " steps");
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < count; ++i) {
      if (!records[i]) throw Error("beta=" + io::format_double(config.beta_list[i]) + ": " + errors[i]);
    }

    std::ostringstream sweep;
    std::ostringstream masses;
    sweep << "beta,sqrt_beta,n_clusters,largest_mass,energy_final,terminated\n";
    masses << "beta,sqrt_beta,cluster,mass,limit_bound,finite_bound\n";
    bool all_converged = true;
    for (const auto& r : records) {
      const double sb = std::sqrt(r->beta);
      sweep << io::format_double(r->beta) << ',' << io::format_double(sb) << ',' << r->clusters.clusters.size()
            << ',' << io::format_double(r->clusters.largest_mass()) << ',' << io::format_double(r->final_energy)
            << ',' << to_string(r->reason) << '\n';
      for (std::size_t k = 0; k < r->thm5.clusters.size(); ++k) {
        masses << io::format_double(r->beta) << ',' << io::format_double(sb) << ',' << k << ','
               << io::format_double(r->thm5.clusters[k].mass) << ',' << io::format_double(r->limit) << ','
               << io::format_double(r->finite_bound) << '\n';
      }
      all_converged = all_converged && r->reason == Termination::converged;
    }
    io::write_text(root / "sweep.csv", sweep.str());
    io::write_text(root / "masses.csv", masses.str());
    nlohmann::json echo = config.to_json();
    echo["output_dir"] = root.string();
    io::write_json(root / "sweep_config.json", echo);
    return all_converged ? ExitCode::ok : ExitCode::budget;
  });
}

int cmd_analyze(const fs::path& run_dir, const std::vector<std::string>& checks_in, double merge_tol) {
  return guarded([&] {
    if (!fs::exists(run_dir / "summary.json") || !fs::exists(run_dir / "final_state.csv")) {
      throw IoError(run_dir.string() + ": missing summary.json or final_state.csv");
    }
    const auto summary = io::read_json(run_dir / "summary.json");
    const auto cfg = ExperimentConfig::from_json(summary.at("config"));
    std::optional<PerceptronParams> params;
    if (summary.contains("perceptron_params") && !summary.at("perceptron_params").is_null()) {
      params = perceptron_from_json(summary.at("perceptron_params"));
    }
    const PerceptronParams* pp = params ? &*params : nullptr;
    std::ifstream in(run_dir / "final_state.csv");
    const Ensemble ens = read_ensemble_csv(in);
    const double beta = cfg.dynamics.beta;
    const KernelParams kp = cfg.dynamics.kernel();

    std::vector<std::string> checks = checks_in;
    if (checks.empty()) checks = {"hessian", "bounds", "spectrum", "extrema"};
    nlohmann::json out = {{"run_dir", run_dir.string()}, {"beta", beta}, {"checks", nlohmann::json::object()}};
    bool all_pass = true;
    for (const auto& check : checks) {
      nlohmann::json r;
      if (check == "hessian") {
        if (ens.dim() != 2) {
          r = {{"applicable", false}, {"reason", "Hessian defined for d = 2 only"}};
        } else {
          const Ensemble merged = merge_coincident(ens, merge_tol);
          const auto h = hessian_d2(merged, kp, pp);
          const auto s = sopd_check(h, 1e-6);
          r = {{"applicable", true},
               {"atoms", merged.size()},
               {"min_eigenvalue", s.min_eigenvalue},
               {"spectral_radius", s.spectral_radius},
               {"warnings", h.warnings()},
               {"pass", s.pass}};
          std::ofstream f(run_dir / "hessian.csv", std::ios::binary);
          h.write_csv(f);
        }
      } else if (check == "bounds") {
        const auto report = detect_at(ens, beta, interaction_scale(beta));
        BoundsOptions opts;
        opts.attention_scale = kp.scale_factor();
        const auto diag = verify_bounds(report, ens, beta, pp, opts);
        r = diag.to_json();
        r["applicable"] = true;
        r["pass"] = diag.all_pass;
      } else if (check == "spectrum") {
        if (ens.dim() != 2) {
          r = {{"applicable", false}, {"reason", "circle Fourier analysis needs d = 2"}};
        } else {
          const auto rep = spectral_report(ens, beta, 20);
          const double rel = rep.residual_max / bessel_i(0, beta);
          r = rep.to_json();
          r["applicable"] = true;
          r["relative_residual"] = rel;
          r["pass"] = rel <= 1e-8;
        }
      } else if (check == "extrema") {
        if (!pp) {
          r = {{"applicable", false}, {"reason", "no perceptron"}};
        } else if (pp->dim() > 3 && !(pp->activation == Activation::relu && !pp->has_bias())) {
          r = {{"applicable", false}, {"reason", "sampling fallback needs d <= 3"}};
        } else {
          const auto mx = global_max(*pp, cfg.dynamics.seed);
          // Energy of the best Dirac mass in the simulated kernel scale.
          const double e_max = kp.scale_factor() * std::exp(beta) / (2.0 * beta) + 0.5 * mx.value;
          const double e_run = total_energy(ens, kp, pp);
          r = mx.to_json(beta);
          r["applicable"] = true;
          r["energy_max_simulated_scale"] = e_max;
          r["energy_final"] = e_run;
          r["pass"] = e_run <= e_max + 1e-9 * (1.0 + std::abs(e_max));
        }
      } else {
        throw ConfigError("unknown check '" + check + "'");
      }
      if (r.value("applicable", false)) all_pass = all_pass && r.value("pass", false);
      out["checks"][check] = r;
    }
    out["all_pass"] = all_pass;
    io::write_json(run_dir / "analysis.json", out);
    log(std::string("analyze: ") + (all_pass ? "all checks passed" : "some checks failed"));
    return all_pass ? ExitCode::ok : ExitCode::check_failed;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Mean-field attention and perceptron dynamics on the sphere"};
  app.require_subcommand(1);

  std::string config_path;
  ExperimentConfig cfg;
  std::optional<double> beta, dt, speed_tol;
  std::optional<std::string> mode, normalization, kernel_scale, perceptron_path, output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n, dim, max_steps, record_every;
  std::vector<double> beta_list;
  std::size_t jobs = 0;

  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON experiment config");
    sub->add_option("--beta", beta, "inverse temperature");
    sub->add_option("--mode", mode, "ascent or descent");
    sub->add_option("--normalization", normalization, "unnormalized or softmax");
    sub->add_option("--kernel-scale", kernel_scale, "raw or peak");
    sub->add_option("--seed", seed, "initialization seed");
    sub->add_option("-N,--particles", n, "number of particles");
    sub->add_option("-d,--dim", dim, "ambient dimension");
    sub->add_option("--dt", dt, "Euler step");
    sub->add_option("--max-steps", max_steps, "step budget");
    sub->add_option("--speed-tol", speed_tol, "stopping speed");
    sub->add_option("--record-every", record_every, "keep positions every k-th snapshot");
    sub->add_option("--perceptron", perceptron_path, "perceptron JSON file");
    sub->add_option("-o,--output-dir", output_dir, "output directory");
  };

  auto* sim = app.add_subcommand("simulate", "run the dynamics once");
  add_run_options(sim);
  auto* sweep = app.add_subcommand("sweep", "run the dynamics for every beta in a list");
  add_run_options(sweep);
  sweep->add_option("--beta-list", beta_list, "inverse temperatures")->delimiter(',');
  sweep->add_option("-j,--jobs", jobs, "concurrent runs (default: cores)");

  auto* analyze = app.add_subcommand("analyze", "post-hoc checks on a run directory");
  std::string run_dir;
  std::vector<std::string> checks;
  double merge_tol = 1e-9;
  analyze->add_option("run_dir", run_dir, "run directory")->required();
  analyze->add_option("--checks", checks, "hessian,bounds,spectrum,extrema")->delimiter(',');
  analyze->add_option("--merge-tol", merge_tol, "merge atoms closer than this before the Hessian");

  auto* extrema = app.add_subcommand("extrema", "maximizers of the perceptron potential");
  std::string ex_perceptron;
  std::optional<double> ex_beta;
  std::string ex_out;
  extrema->add_option("--perceptron", ex_perceptron, "perceptron JSON file")->required();
  extrema->add_option("--beta", ex_beta, "also report the maximal energy at this beta");
  extrema->add_option("-o,--output", ex_out, "write the report as JSON");

  auto* gen = app.add_subcommand("gen-theta", "sample perceptron weights from N(0, 1)");
  std::size_t g_dim = 2, g_count = 0;
  std::string g_act = "relu", g_out;
  std::uint64_t g_seed = 0;
  gen->add_option("-d,--dim", g_dim, "dimension");
  gen->add_option("--count", g_count, "number of neurons (default: d)");
  gen->add_option("--activation", g_act, "relu or gelu");
  gen->add_option("--seed", g_seed, "seed");
  gen->add_option("-o,--output", g_out, "output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::ok : ExitCode::invalid;
  }

  auto build_config = [&]() {
    ExperimentConfig c;
    if (!config_path.empty()) c = ExperimentConfig::from_json(io::read_json(config_path));
    if (beta) c.dynamics.beta = *beta;
    if (mode) c.dynamics.mode = flow_mode_from_string(*mode);
    if (normalization) c.dynamics.normalization = normalization_from_string(*normalization);
    if (kernel_scale) c.dynamics.kernel_scale = kernel_scale_from_string(*kernel_scale);
    if (seed) c.dynamics.seed = *seed;
    if (dt) c.dynamics.dt = *dt;
    if (max_steps) c.dynamics.max_steps = *max_steps;
    if (speed_tol) c.dynamics.speed_tol = *speed_tol;
    if (record_every) c.dynamics.record_every = *record_every;
    if (n) c.n = *n;
    if (dim) c.dim = *dim;
    if (perceptron_path) {
      c.perceptron_file = *perceptron_path;
      c.perceptron.reset();
    }
    if (!beta_list.empty()) c.beta_list = beta_list;
    if (output_dir) c.output_dir = *output_dir;
    return c;
  };

  if (*sim) {
    ExperimentConfig c;
    if (int rc = guarded([&] { c = build_config(); return 0; }); rc != 0) return rc;
    return cmd_simulate(c);
  }
  if (*sweep) {
    ExperimentConfig c;
    if (int rc = guarded([&] { c = build_config(); return 0; }); rc != 0) return rc;
    return cmd_sweep(c, jobs);
  }
  if (*analyze) return cmd_analyze(run_dir, checks, merge_tol);
  if (*extrema) {
    return guarded([&] {
      const auto p = perceptron_from_json(io::read_json(ex_perceptron));
      const auto mx = global_max(p);
      std::cout << "method " << mx.method << "  value " << io::format_double(mx.value)
                << (mx.continuum_suspected ? "  (continuum suspected)" : "") << '\n';
      if (!mx.per_cell.empty()) {
        std::cout << std::left << std::setw(6) << "cell" << std::setw(24) << "active" << std::setw(24)
                  << "cell max" << "argmax\n";
        for (std::size_t k = 0; k < mx.per_cell.size(); ++k) {
          const auto& c = mx.per_cell[k];
          std::string act = "{";
          for (std::size_t j = 0; j < c.cell.active_set.size(); ++j) {
            act += (j ? "," : "") + std::to_string(c.cell.active_set[j]);
          }
          act += "}";
          std::string arg;
          for (double x : c.argmax.coords()) arg += (arg.empty() ? "" : " ") + io::format_double(x);
          std::cout << std::setw(6) << k << std::setw(24) << act << std::setw(24) << io::format_double(c.value)
                    << arg << '\n';
        }
      }
      for (const auto& x : mx.maximizers) {
        std::cout << "maximizer";
        for (double v : x.coords()) std::cout << ' ' << io::format_double(v);
        std::cout << '\n';
      }
      if (ex_beta) std::cout << "energy " << io::format_double(mx.energy(*ex_beta)) << '\n';
      if (!ex_out.empty()) io::write_json(ex_out, mx.to_json(ex_beta));
      return static_cast<int>(ExitCode::ok);
    });
  }
  if (*gen) {
    return guarded([&] {
      const auto p = sample_perceptron(g_dim, g_count, activation_from_string(g_act), g_seed);
      io::write_json(g_out, to_json(p));
      return static_cast<int>(ExitCode::ok);
    });
  }
  return ExitCode::invalid;
}

}  // namespace aml::cli
