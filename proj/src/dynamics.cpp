#include "aml/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "aml/clusters.hpp"
#include "aml/errors.hpp"
#include "aml/io.hpp"
#include "aml/rng.hpp"

namespace aml {

std::string to_string(FlowMode m) { return m == FlowMode::ascent ? "ascent" : "descent"; }

FlowMode flow_mode_from_string(const std::string& s) {
  if (s == "ascent") return FlowMode::ascent;
  if (s == "descent") return FlowMode::descent;
  throw ConfigError("unknown mode '" + s + "'");
}

std::string to_string(Termination t) { return t == Termination::converged ? "converged" : "step_budget"; }

void DynamicsConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (max_steps == 0) throw ConfigError("max_steps must be positive");
  if (snapshot_every == 0) throw ConfigError("snapshot_every must be positive");
  if (window == 0) throw ConfigError("window must be at least 1");
  if (!(speed_tol > 0.0)) throw ConfigError("speed_tol must be positive");
  if (record_every == 0) throw ConfigError("record_every must be positive");
  try {
    kernel().validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json DynamicsConfig::to_json() const {
  return {{"beta", beta},
          {"mode", to_string(mode)},
          {"normalization", to_string(normalization)},
          {"kernel_scale", to_string(kernel_scale)},
          {"practical_softmax", practical_softmax},
          {"dt", dt},
          {"max_steps", max_steps},
          {"snapshot_every", snapshot_every},
          {"window", window},
          {"speed_tol", speed_tol},
          {"seed", seed},
          {"record_every", record_every}};
}

DynamicsConfig DynamicsConfig::from_json(const nlohmann::json& j) {
  DynamicsConfig c;
  try {
    c.beta = j.value("beta", c.beta);
    if (j.contains("mode")) c.mode = flow_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("normalization")) {
      c.normalization = normalization_from_string(j.at("normalization").get<std::string>());
    }
    if (j.contains("kernel_scale")) {
      c.kernel_scale = kernel_scale_from_string(j.at("kernel_scale").get<std::string>());
    }
    c.practical_softmax = j.value("practical_softmax", c.practical_softmax);
    c.dt = j.value("dt", c.dt);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
    c.window = j.value("window", c.window);
    c.speed_tol = j.value("speed_tol", c.speed_tol);
    c.seed = j.value("seed", c.seed);
    c.record_every = j.value("record_every", c.record_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dynamics config: ") + e.what());
  }
  return c;
}

void velocity_into(const DynamicsConfig& cfg, const Ensemble& ens, const PerceptronParams* params,
                   std::span<double> out) {
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  if (out.size() != n * d) throw DomainError("velocity: output size mismatch");
  if (params && params->dim() != d) throw DomainError("velocity: perceptron dimension mismatch");
  std::vector<double> w(n);
  interaction_fields(ens, cfg.kernel(), out, w);
  const double s = cfg.sign();
  const bool softmax = cfg.normalization == FieldNormalization::softmax;
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto vi = out.subspan(i * d, d);
    double div = 1.0;
    if (softmax) div = cfg.practical_softmax ? w[i] * cfg.beta : w[i];
    if (params) {
      drift_into(*params, ens.position(i), u);
    } else {
      std::fill(u.begin(), u.end(), 0.0);
    }
    for (std::size_t k = 0; k < d; ++k) vi[k] = s * (vi[k] / div + u[k]);
  }
}

std::vector<TangentVector> velocity(const DynamicsConfig& cfg, const Ensemble& ens,
                                    const PerceptronParams* params) {
  std::vector<double> v(ens.size() * ens.dim());
  velocity_into(cfg, ens, params, v);
  std::vector<TangentVector> out;
  out.reserve(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    auto vi = std::span<const double>(v).subspan(i * ens.dim(), ens.dim());
    out.push_back(TangentVector{ens.point(i), std::vector<double>(vi.begin(), vi.end())});
  }
  return out;
}

namespace {

double max_speed(std::span<const double> v, std::size_t d) {
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); i += d) best = std::max(best, norm(v.subspan(i, d)));
  return best;
}

void advance(std::vector<double>& coords, std::span<const double> v, std::size_t d, double dt) {
  for (std::size_t i = 0; i < coords.size(); i += d) {
    retract_inplace(std::span<double>(coords).subspan(i, d), v.subspan(i, d), dt);
  }
}

}  // namespace

Ensemble step(const DynamicsConfig& cfg, const Ensemble& ens, const PerceptronParams* params) {
  cfg.validate();
  std::vector<double> v(ens.size() * ens.dim());
  velocity_into(cfg, ens, params, v);
  std::vector<double> coords(ens.coords().begin(), ens.coords().end());
  advance(coords, v, ens.dim(), cfg.dt);
  return ens.with_coords(std::move(coords));
}

RunResult run(const DynamicsConfig& cfg, const Ensemble& init, const PerceptronParams* params,
              const SnapshotCallback& on_snapshot) {
  cfg.validate();
  const std::size_t d = init.dim();
  const KernelParams kp = cfg.kernel();
  const double threshold = detection_threshold(cfg.beta, d);
  std::vector<double> v(init.size() * d);
  Ensemble ens = init;
  RunResult out{{}, init, Termination::step_budget, 0, 0.0, 0.0};
  std::size_t snapshot_index = 0;

  for (std::size_t t = 0;; ++t) {
    velocity_into(cfg, ens, params, v);
    const double speed = max_speed(v, d);
    const bool at_snapshot = t % cfg.snapshot_every == 0;
    const bool last = t == cfg.max_steps;
    bool converged = false;
    if (at_snapshot || last) {
      Snapshot s{t, total_energy(ens, kp, params), speed, count_clusters(ens, threshold), {}};
      if (!std::isfinite(s.energy)) throw OverflowError("energy is not finite at step " + std::to_string(t));
      if (snapshot_index % cfg.record_every == 0) s.coords.assign(ens.coords().begin(), ens.coords().end());
      ++snapshot_index;
      out.snapshots.push_back(std::move(s));
      const auto& snaps = out.snapshots;
      if (snaps.size() >= cfg.window && speed <= cfg.speed_tol) {
        converged = std::all_of(snaps.end() - static_cast<std::ptrdiff_t>(cfg.window), snaps.end(),
                                [&](const Snapshot& x) { return x.n_clusters == snaps.back().n_clusters; });
      }
      if (converged || last) {
        auto& final_snap = out.snapshots.back();
        if (final_snap.coords.empty()) final_snap.coords.assign(ens.coords().begin(), ens.coords().end());
        if (on_snapshot) on_snapshot(final_snap);
        out.reason = converged ? Termination::converged : Termination::step_budget;
        out.steps = t;
        out.final_speed = speed;
        out.final_energy = final_snap.energy;
        out.final_state = ens;
        return out;
      }
      if (on_snapshot) on_snapshot(out.snapshots.back());
    }
    std::vector<double> coords(ens.coords().begin(), ens.coords().end());
    advance(coords, v, d, cfg.dt);
    ens = ens.with_coords(std::move(coords));
  }
}

Ensemble uniform_init(std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (n == 0) throw DomainError("uniform_init: N must be positive");
  if (dim < 2) throw DomainError("uniform_init: d must be at least 2");
  std::vector<double> coords;
  coords.reserve(n * dim);
  if (dim == 2) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 2.0 * std::numbers::pi * rng::uniform(seed, rng::streams::init_angles, i);
      coords.push_back(std::cos(t));
      coords.push_back(std::sin(t));
    }
  } else {
    std::uint64_t k = 0;
    std::vector<double> g(dim);
    for (std::size_t i = 0; i < n; ++i) {
      double nn = 0.0;
      do {
        for (auto& c : g) c = rng::normal(seed, rng::streams::init_gauss, k++);
        nn = norm(g);
      } while (nn < 1e-12);
      for (double c : g) coords.push_back(c / nn);
    }
  }
  return Ensemble::equal_masses(dim, std::move(coords));
}

void write_trajectory_csv(std::ostream& out, const RunResult& run, std::span<const double> masses,
                          std::size_t dim) {
  out << "step,atom,mass";
  if (dim == 2) {
    out << ",theta";
  } else {
    for (std::size_t k = 0; k < dim; ++k) out << ",x" << k;
  }
  out << '\n';
  for (const auto& s : run.snapshots) {
    if (s.coords.empty()) continue;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      const double* x = s.coords.data() + i * dim;
      out << s.step << ',' << i << ',' << io::format_double(masses[i]);
      if (dim == 2) {
        out << ',' << io::format_double(std::atan2(x[1], x[0]));
      } else {
        for (std::size_t k = 0; k < dim; ++k) out << ',' << io::format_double(x[k]);
      }
      out << '\n';
    }
  }
}

}  // namespace aml
