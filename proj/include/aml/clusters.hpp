#pragma once

// Single-linkage cluster detection at the interaction scale 1/(2 sqrt(beta))
// and the anti-concentration checks that apply to such clusters.

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "aml/perceptron.hpp"
#include "aml/sphere.hpp"

namespace aml {

/// min{1/(2 sqrt(beta)), pi/(2d)}; at d = 2 this is min{1/(2 sqrt(beta)), pi/4}.
double detection_threshold(double beta, std::size_t dim);
/// 1/(2 sqrt(beta)).
double interaction_scale(double beta);

struct Cluster {
  std::vector<std::size_t> members;  // ascending
  double mass = 0.0;
  double diameter = 0.0;  // max pairwise geodesic distance
};

struct ClusterReport {
  double threshold = 0.0;
  double beta = 0.0;
  std::vector<Cluster> clusters;  // ordered by smallest member
  nlohmann::json flags = nlohmann::json::object();

  double largest_mass() const;
  nlohmann::json to_json() const;
  static ClusterReport from_json(const nlohmann::json& j);
};

ClusterReport detect(const Ensemble& ens, double beta);
ClusterReport detect_at(const Ensemble& ens, double beta, double threshold);
/// Number of single-linkage components; no diameters.
std::size_t count_clusters(const Ensemble& ens, double threshold);

/// Finite-beta cluster mass bound
///   (2 e^(beta - 3/2) + C) / (2 e^(beta - 3/2) + e^(beta - lambda^2/2)(1 - lambda^2)/2),
/// clamped to 1. `attention_scale` is the factor by which the simulated
/// interaction energy was scaled relative to exp(beta x.y); the perceptron
/// constant is compared in the unscaled energy as C / attention_scale.
double mass_bound(double beta, double lambda, double c_theta, double attention_scale = 1.0);
/// beta -> infinity limit of mass_bound; 0.57420 at lambda = 1/2.
double mass_bound_limit(double lambda);

/// sum_j |omega_j| (L |a_j|^2 + (|sigma(0)| + L (|a_j| + |b_j|)) |a_j|), L the
/// Lipschitz constant of the activation.
double c_theta(const PerceptronParams& params);

/// (3/8) e^(-1/8): below this C_theta no stationary state is a single cluster.
double exclusion_constant();

struct BoundsOptions {
  double lambda = 0.5;
  double tol = 0.02;
  double attention_scale = 1.0;
  std::optional<std::size_t> arcs;  // M; default: number of clusters
  std::optional<double> arc_length;  // L; default: largest cluster diameter
  std::vector<double> eps_grid = {0.2, 0.1, 0.05, 0.01};
  double atom_tol = 0.0;  // atoms closer than this count as one; 0: threshold / 10
};

struct ClusterCheck {
  std::size_t index;
  double mass;
  double diameter;
  double group_mass;  // heaviest subset of diameter <= 1/(2 sqrt(beta))
  bool group_exact;   // false when found by ball sampling (d >= 3)
  bool within_limit;  // group_mass <= limit + tol
  bool within_finite;
};

struct AtomCountRow {
  double eps;
  std::size_t count;
  double bound;
  bool pass;
};

struct BoundDiagnostics {
  double beta;
  double threshold;
  double c_theta;
  double limit;
  double finite_bound;
  std::vector<ClusterCheck> clusters;
  std::vector<AtomCountRow> atom_counts;
  std::size_t arcs;
  double arc_length;
  bool single_cluster_excluded;  // hypothesis of the exclusion statement holds
  bool exclusion_violated;       // ... and yet everything is one cluster
  bool all_pass;

  nlohmann::json to_json() const;
};

/// `report` must come from detect_at(ens, beta, interaction_scale(beta)),
/// otherwise ScaleMismatchError. `params` may be null (C_theta = 0).
BoundDiagnostics verify_bounds(const ClusterReport& report, const Ensemble& ens, double beta,
                               const PerceptronParams* params, const BoundsOptions& opts = {});

}  // namespace aml
