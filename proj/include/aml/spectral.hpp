#pragma once

// Fourier analysis on the circle. Convention: g_n = (1/2pi) int g(theta)
// e^{-i n theta} dtheta and m_n = sum_i m_i e^{-i n theta_i}, under which the
// field f(x) = int exp(beta x.y) dmu(y) has f_n = I_|n|(beta) m_n.

#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

#include "aml/sphere.hpp"

namespace aml {

/// Modified Bessel function of the first kind, I_n(beta), 0 <= n <= 200,
/// 0 <= beta <= 700. RangeError outside.
double bessel_i(int n, double beta);
/// I_0 .. I_{n_max} in one pass.
std::vector<double> bessel_i_all(int n_max, double beta);

class FourierSeries {
 public:
  FourierSeries() = default;
  explicit FourierSeries(int n_max) : n_max_(n_max), c_(static_cast<std::size_t>(2 * n_max + 1)) {}

  int n_max() const { return n_max_; }
  std::complex<double>& operator[](int n) { return c_.at(static_cast<std::size_t>(n + n_max_)); }
  const std::complex<double>& operator[](int n) const { return c_.at(static_cast<std::size_t>(n + n_max_)); }

  /// max_n |c_{-n} - conj(c_n)|.
  double conjugate_asymmetry() const;
  nlohmann::json to_json() const;  // [[n, re, im], ...]

 private:
  int n_max_ = 0;
  std::vector<std::complex<double>> c_;
};

FourierSeries moments(const Ensemble& ens, int n_max);

struct ConvolutionCoeffs {
  FourierSeries coeffs;
  std::vector<double> residuals;  // |f_n - I_|n| m_n| for n = 0..n_max
  double residual_max;
};

/// Trapezoid quadrature of f on a uniform grid (4096 points by default).
ConvolutionCoeffs convolution_coeffs(const Ensemble& ens, double beta, int n_max, int grid = 4096);

struct Reconstruction {
  FourierSeries density;
  std::vector<std::string> warnings;
};

/// rho_n = f_n / I_|n|(beta); warns where I_|n|(beta) < 1e-280.
Reconstruction reconstruct_density(const FourierSeries& coeffs, double beta);

struct SpectralReport {
  double beta;
  int n_max;
  FourierSeries moments;
  FourierSeries conv_coeffs;
  double residual_max;

  nlohmann::json to_json() const;
};

SpectralReport spectral_report(const Ensemble& ens, double beta, int n_max);

}  // namespace aml
