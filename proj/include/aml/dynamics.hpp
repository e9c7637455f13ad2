#pragma once

// Explicit Euler integration of the particle flow
//   dx_i/dt = s (A(x_i) + u(x_i)),  s = +1 (ascent) or -1 (descent),
// where A is the attention field (optionally divided by the first variation
// weight) and u the perceptron drift, followed by renormalization onto the
// sphere.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aml/attention.hpp"
#include "aml/kernels.hpp"
#include "aml/perceptron.hpp"
#include "aml/sphere.hpp"

namespace aml {

enum class FlowMode { ascent, descent };

std::string to_string(FlowMode m);
FlowMode flow_mode_from_string(const std::string& s);

struct DynamicsConfig {
  double beta = 1.0;
  FlowMode mode = FlowMode::descent;
  FieldNormalization normalization = FieldNormalization::unnormalized;
  KernelScale kernel_scale = KernelScale::raw;
  bool practical_softmax = false;
  double dt = 0.1;
  std::size_t max_steps = 200000;
  std::size_t snapshot_every = 10;
  std::size_t window = 5;
  double speed_tol = 1e-4;
  std::uint64_t seed = 0;
  // Positions are kept for every record_every-th snapshot (and the last one).
  std::size_t record_every = 1;

  void validate() const;
  KernelParams kernel() const { return {beta, kernel_scale}; }
  double sign() const { return mode == FlowMode::ascent ? 1.0 : -1.0; }

  nlohmann::json to_json() const;
  static DynamicsConfig from_json(const nlohmann::json& j);
  bool operator==(const DynamicsConfig&) const = default;
};

/// Row-major N x d velocities.
void velocity_into(const DynamicsConfig& cfg, const Ensemble& ens, const PerceptronParams* params,
                   std::span<double> out);
std::vector<TangentVector> velocity(const DynamicsConfig& cfg, const Ensemble& ens,
                                    const PerceptronParams* params);

Ensemble step(const DynamicsConfig& cfg, const Ensemble& ens, const PerceptronParams* params);

struct Snapshot {
  std::size_t step;
  double energy;
  double max_speed;
  std::size_t n_clusters;
  std::vector<double> coords;  // empty unless recorded
};

enum class Termination { converged, step_budget };
std::string to_string(Termination t);

struct RunResult {
  std::vector<Snapshot> snapshots;
  Ensemble final_state;
  Termination reason;
  std::size_t steps;
  double final_speed;
  double final_energy;
};

using SnapshotCallback = std::function<void(const Snapshot&)>;

/// Snapshots are taken at step 0 and every snapshot_every steps. The run
/// converges once the last `window` snapshots agree on the cluster count and
/// the current max speed is at most speed_tol.
RunResult run(const DynamicsConfig& cfg, const Ensemble& init, const PerceptronParams* params,
              const SnapshotCallback& on_snapshot = {});

/// N atoms of mass 1/N: uniform angles for d = 2, normalized Gaussians otherwise.
Ensemble uniform_init(std::size_t n, std::size_t dim, std::uint64_t seed);

/// `step,atom,mass,theta` for d = 2 or `step,atom,mass,x0,...` otherwise; one
/// row per atom of every recorded snapshot.
void write_trajectory_csv(std::ostream& out, const RunResult& run, std::span<const double> masses,
                          std::size_t dim);

}  // namespace aml
