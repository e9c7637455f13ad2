#include "aml/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aml/errors.hpp"

namespace aml {

namespace {

constexpr int kMaxOrder = 200;
constexpr double kMaxBeta = 700.0;
constexpr double kSeriesLimit = 20.0;

void check_range(int n, double beta) {
  if (n < 0 || n > kMaxOrder) throw RangeError("bessel_i: order must lie in [0, 200]");
  if (!(beta >= 0.0) || beta > kMaxBeta) throw RangeError("bessel_i: argument must lie in [0, 700]");
}

// sum_m (z/2)^(2m+n) / (m! (m+n)!)
double series(int n, double z) {
  const double h = 0.5 * z;
  double term = std::exp(n * std::log(h) - std::lgamma(n + 1.0));
  if (n == 0) term = 1.0;
  double sum = term;
  const double q = h * h;
  for (int m = 1; m < 500; ++m) {
    term *= q / (static_cast<double>(m) * static_cast<double>(m + n));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Miller's downward recurrence I_{k-1} = (2k/z) I_k + I_{k+1}, normalized by
// e^z = I_0 + 2 sum_{k>=1} I_k. Values are rescaled on the way down to avoid
// overflow; the normalization is carried along.
std::vector<double> miller(int n_max, double z) {
  const int start = std::max(n_max, static_cast<int>(z)) + 60 + static_cast<int>(std::sqrt(60.0 * z));
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  double next = 0.0;
  double cur = 1e-300;
  double total = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = (2.0 * k / z) * cur + next;
    if (k <= n_max) out[static_cast<std::size_t>(k)] = cur;
    total += 2.0 * cur;
    next = cur;
    cur = prev;
    if (cur > 1e250) {
      const double s = 1e-250;
      cur *= s;
      next *= s;
      total *= s;
      for (int j = k; j <= n_max; ++j) {
        if (j >= 1) out[static_cast<std::size_t>(j)] *= s;
      }
    }
  }
  out[0] = cur;
  total += cur;
  // I_k = out_k e^z / total, with e^z split to stay finite up to z = 700.
  const double log_norm = z - std::log(total);
  for (auto& v : out) v = v == 0.0 ? 0.0 : std::exp(std::log(v) + log_norm);
  return out;
}

}  // namespace

double bessel_i(int n, double beta) {
  check_range(n, beta);
  if (beta == 0.0) return n == 0 ? 1.0 : 0.0;
  if (beta <= kSeriesLimit) return series(n, beta);
  return miller(n, beta)[static_cast<std::size_t>(n)];
}

std::vector<double> bessel_i_all(int n_max, double beta) {
  check_range(n_max, beta);
  if (beta == 0.0) {
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    out[0] = 1.0;
    return out;
  }
  if (beta > kSeriesLimit) return miller(n_max, beta);
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) out[static_cast<std::size_t>(n)] = series(n, beta);
  return out;
}

double FourierSeries::conjugate_asymmetry() const {
  double worst = 0.0;
  for (int n = 0; n <= n_max_; ++n) worst = std::max(worst, std::abs((*this)[-n] - std::conj((*this)[n])));
  return worst;
}

nlohmann::json FourierSeries::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (int n = -n_max_; n <= n_max_; ++n) arr.push_back({n, (*this)[n].real(), (*this)[n].imag()});
  return arr;
}

FourierSeries moments(const Ensemble& ens, int n_max) {
  if (ens.dim() != 2) throw DomainError("moments requires d = 2");
  if (n_max < 0) throw DomainError("moments: n_max must be nonnegative");
  FourierSeries out(n_max);
  const auto theta = ens.angles();
  for (int n = -n_max; n <= n_max; ++n) {
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += ens.mass(i) * std::polar(1.0, -n * theta[i]);
    out[n] = s;
  }
  return out;
}

ConvolutionCoeffs convolution_coeffs(const Ensemble& ens, double beta, int n_max, int grid) {
  if (ens.dim() != 2) throw DomainError("convolution_coeffs requires d = 2");
  if (n_max < 0 || n_max > 64) throw DomainError("convolution_coeffs: n_max must lie in [0, 64]");
  if (grid <= 2 * n_max) throw DomainError("convolution_coeffs: grid too coarse");
  const auto theta = ens.angles();
  const double h = 2.0 * std::numbers::pi / grid;
  std::vector<double> f(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) {
    const double t = g * h;
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) s += ens.mass(i) * std::exp(beta * std::cos(t - theta[i]));
    f[static_cast<std::size_t>(g)] = s;
  }
  ConvolutionCoeffs out{FourierSeries(n_max), {}, 0.0};
  for (int n = -n_max; n <= n_max; ++n) {
    std::complex<double> s = 0.0;
    for (int g = 0; g < grid; ++g) s += f[static_cast<std::size_t>(g)] * std::polar(1.0, -n * g * h);
    out.coeffs[n] = s / static_cast<double>(grid);
  }
  const auto m = moments(ens, n_max);
  const auto I = bessel_i_all(n_max, beta);
  for (int n = 0; n <= n_max; ++n) {
    const double r = std::max(std::abs(out.coeffs[n] - I[static_cast<std::size_t>(n)] * m[n]),
                              std::abs(out.coeffs[-n] - I[static_cast<std::size_t>(n)] * m[-n]));
    out.residuals.push_back(r);
    out.residual_max = std::max(out.residual_max, r);
  }
  return out;
}

Reconstruction reconstruct_density(const FourierSeries& coeffs, double beta) {
  const auto I = bessel_i_all(coeffs.n_max(), beta);
  Reconstruction out{FourierSeries(coeffs.n_max()), {}};
  for (int n = -coeffs.n_max(); n <= coeffs.n_max(); ++n) {
    const double in = I[static_cast<std::size_t>(std::abs(n))];
    if (in < 1e-280) {
      out.warnings.push_back("I_" + std::to_string(std::abs(n)) + " below 1e-280; coefficient " +
                             std::to_string(n) + " is amplified noise");
    }
    out.density[n] = in > 0.0 ? coeffs[n] / in : std::complex<double>(0.0);
  }
  return out;
}

nlohmann::json SpectralReport::to_json() const {
  return {{"beta", beta},
          {"n_max", n_max},
          {"moments", moments.to_json()},
          {"conv_coeffs", conv_coeffs.to_json()},
          {"residual_max", residual_max}};
}

SpectralReport spectral_report(const Ensemble& ens, double beta, int n_max) {
  auto cc = convolution_coeffs(ens, beta, n_max);
  return {beta, n_max, moments(ens, n_max), cc.coeffs, cc.residual_max};
}

}  // namespace aml
