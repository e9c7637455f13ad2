#pragma once

// Pairwise interaction sums behind the attention field and the interaction
// energy. The top-level functions parallelize over atoms with OpenMP; the
// `serial` namespace holds the single-threaded reference they are tested
// against. Both evaluate every row in the same order, so results agree bit for
// bit regardless of thread count.

#include <span>
#include <string>

#include "aml/sphere.hpp"

namespace aml {

// raw:  k(c) = exp(beta c)
// peak: k(c) = exp(beta (c - 1)), the raw kernel divided by its value at c = 1
enum class KernelScale { raw, peak };

struct KernelParams {
  double beta = 1.0;
  KernelScale scale = KernelScale::raw;

  /// Throws DomainError unless beta > 0 and finite; OverflowError for a raw
  /// kernel with beta > 700.
  void validate() const;
  double kernel(double c) const;
  /// Factor k / exp(beta c): 1 for raw, exp(-beta) for peak.
  double scale_factor() const;
};

std::string to_string(KernelScale s);
KernelScale kernel_scale_from_string(const std::string& s);

/// For every atom i writes
///   field[i*d .. i*d+d) = P_{x_i}^perp sum_j m_j k(x_i.x_j) x_j
///   weight[i]           = (1/beta) sum_j m_j k(x_i.x_j)
void interaction_fields(const Ensemble& ens, const KernelParams& kp, std::span<double> field,
                        std::span<double> weight);

/// (1/(2 beta)) sum_{i,j} m_i m_j k(x_i.x_j), rows reduced by pairwise summation.
double interaction_energy(const Ensemble& ens, const KernelParams& kp);

/// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> v);

namespace serial {
void interaction_fields(const Ensemble& ens, const KernelParams& kp, std::span<double> field,
                        std::span<double> weight);
double interaction_energy(const Ensemble& ens, const KernelParams& kp);
}  // namespace serial

}  // namespace aml
