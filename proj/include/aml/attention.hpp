#pragma once

// Attention side of the energy E = (1/2 beta) sum m_i m_j exp(beta x_i.x_j)
// + (1/2) sum m_i v(x_i): kernel derivatives in the angle, the first variation
// weight, the attention field, the energy itself and the d = 2 angular Hessian
// of an atomic configuration.

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aml/kernels.hpp"
#include "aml/perceptron.hpp"
#include "aml/sphere.hpp"

namespace aml {

enum class FieldNormalization { unnormalized, softmax };

std::string to_string(FieldNormalization n);
FieldNormalization normalization_from_string(const std::string& s);

struct KernelDerivs {
  double K;
  double K1;
  double K2;
};

/// K(theta) = exp(beta cos theta) and its first two derivatives in theta.
/// Throws OverflowError when beta cos theta > 700.
KernelDerivs kernel_derivs(double beta, double theta);
/// Same derivatives for the kernel selected by `kp` (peak: times exp(-beta)).
KernelDerivs kernel_derivs(const KernelParams& kp, double theta);

/// Positive root of K'' on (0, pi): arccos((sqrt(1 + 4 beta^2) - 1) / (2 beta)).
double theta_c(double beta);

/// w(x) = (1/beta) sum_j m_j k(x.x_j).
double first_variation_weight(const Ensemble& ens, std::span<const double> x, const KernelParams& kp);

/// Unnormalized: P_x^perp sum_j m_j k(x.x_j) x_j. Softmax: that field divided
/// by w(x); `practical_softmax` additionally divides by beta, which gives the
/// projected softmax average of the x_j.
TangentVector attention_field(const Ensemble& ens, const UnitVector& x, const KernelParams& kp,
                              FieldNormalization norm, bool practical_softmax = false);

/// Interaction energy plus (1/2) sum_i m_i v(x_i); `params` may be null.
double total_energy(const Ensemble& ens, const KernelParams& kp, const PerceptronParams* params);

class HessianMatrix {
 public:
  explicit HessianMatrix(Eigen::MatrixXd entries, std::vector<std::string> warnings = {});

  std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Header `n=<N>`, then N rows of N comma-separated values.
  void write_csv(std::ostream& out) const;
  static HessianMatrix read_csv(std::istream& in);

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> warnings_;
};

/// Hessian of the energy in the angles theta_i of a d = 2 atomic measure.
/// Throws CoincidentAtomsError for atoms closer than 1e-9; attaches a warning
/// when a ReLU pre-activation sits within 1e-9 of its kink.
HessianMatrix hessian_d2(const Ensemble& ens, const KernelParams& kp, const PerceptronParams* params);

struct SopdResult {
  bool pass;
  double min_eigenvalue;
  double spectral_radius;
};

/// Passes iff the smallest eigenvalue is >= -tol (1 + spectral radius).
SopdResult sopd_check(const HessianMatrix& h, double tol);

struct CurvatureBounds {
  double concave_bound;   // -exp(-lambda^2/2)(1 - lambda^2)/2 * beta e^beta
  double max_tail_bound;  // 2 beta e^(beta - 3/2)
};

CurvatureBounds curvature_bounds(double beta, double lambda);

}  // namespace aml
