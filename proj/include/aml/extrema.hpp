#pragma once

// Maximizers of the perceptron potential v(x) = sum_j omega_j phi(a_j.x) over
// the sphere. For ReLU, v restricted to a sign cell I of the hyperplane
// arrangement {a_j.x = 0} is the quadratic form x^T B_I x with
// B_I = sum_{j active on I} omega_j a_j a_j^T, so the global maximum is the
// best of finitely many constrained eigenvalue problems. Since the energy of
// a Dirac mass at x is e^beta/(2 beta) + v(x)/2, the same points give the
// maximizing measures.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aml/perceptron.hpp"
#include "aml/sphere.hpp"

namespace aml {

struct Cell {
  std::vector<int> sign_pattern;         // +1 or -1 per neuron; -1 for a_j = 0
  std::vector<std::size_t> active_set;   // j with sign_pattern[j] = +1
  std::optional<UnitVector> representative;
  bool sampled = false;                  // feasibility from sampling, not exact
  double arc_lo = 0.0, arc_hi = 0.0;     // d = 2: the cell is the open arc (lo, hi)
};

/// ReLU with zero biases. d = 2: exact arcs; d >= 3: `samples` random
/// directions plus refinement across facets of the cells found.
std::vector<Cell> enumerate_cells(const PerceptronParams& params, std::size_t samples = 100000,
                                  std::uint64_t seed = 0);

struct CellMax {
  double value;
  UnitVector x_star;
  std::vector<UnitVector> ties;  // every candidate within 1e-9 of value
  bool continuum;                // a whole arc or eigenspace attains value
};

/// Maximum of x^T B_I x over the closed cell.
CellMax cell_max(const Cell& cell, const PerceptronParams& params);

struct CellResult {
  Cell cell;
  double value;
  UnitVector argmax;
};

struct MaxReport {
  double value;
  std::vector<UnitVector> maximizers;  // deduplicated at 1e-6
  std::vector<CellResult> per_cell;    // empty for the sampling fallback
  bool continuum_suspected = false;
  std::string method;                  // "cells" or "grid"

  /// Energy of the maximizing measures delta_x.
  double energy(double beta) const;
  nlohmann::json to_json(std::optional<double> beta = std::nullopt) const;
};

/// ReLU without biases uses the cell decomposition; anything else falls back
/// to a dense grid plus local ascent (d <= 3).
MaxReport global_max(const PerceptronParams& params, std::uint64_t seed = 0);

struct SymmetryReport {
  std::vector<double> axis;
  double max_discrepancy;
  std::vector<double> discrepancies;  // one per rotation
  bool pass;

  nlohmann::json to_json() const;
};

/// d = 3. Sliced Wasserstein-1 distance (64 projections) between `ens` and its
/// images under 16 rotations about the common axis of the a_j with
/// omega_j != 0. InapplicableError if those a_j are not collinear.
SymmetryReport minimizer_symmetry_check(const Ensemble& ens, const PerceptronParams& params, double tol,
                                        std::uint64_t seed = 0);

/// Sliced W1 between two measures on S^{d-1} with `projections` directions.
double sliced_w1(const Ensemble& a, const Ensemble& b, std::size_t projections, std::uint64_t seed);

}  // namespace aml
