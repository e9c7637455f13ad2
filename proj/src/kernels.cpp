#include "aml/kernels.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "aml/errors.hpp"

namespace aml {

namespace {

constexpr double kExpGuard = 700.0;

void check_sizes(const Ensemble& ens, std::span<double> field, std::span<double> weight) {
  if (field.size() != ens.size() * ens.dim() || weight.size() != ens.size()) {
    throw DomainError("interaction_fields: output size mismatch");
  }
}

// One row of the field sum. Shared by the parallel and serial paths so the
// floating-point operation order is identical.
inline void field_row(const Ensemble& ens, const KernelParams& kp, std::size_t i, double* f,
                      double& w) {
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  const double* X = ens.coords().data();
  const double* m = ens.masses().data();
  const double* xi = X + i * d;
  for (std::size_t k = 0; k < d; ++k) f[k] = 0.0;
  double ws = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double* xj = X + j * d;
    double c = 0.0;
    for (std::size_t k = 0; k < d; ++k) c += xi[k] * xj[k];
    const double e = m[j] * kp.kernel(c);
    ws += e;
    // The self term is normal to the sphere and projects out exactly.
    if (j == i) continue;
    for (std::size_t k = 0; k < d; ++k) f[k] += e * xj[k];
  }
  double proj = 0.0;
  for (std::size_t k = 0; k < d; ++k) proj += xi[k] * f[k];
  for (std::size_t k = 0; k < d; ++k) f[k] -= proj * xi[k];
  w = ws / kp.beta;
}

inline double energy_row(const Ensemble& ens, const KernelParams& kp, std::size_t i) {
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  const double* X = ens.coords().data();
  const double* m = ens.masses().data();
  const double* xi = X + i * d;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double* xj = X + j * d;
    double c = 0.0;
    for (std::size_t k = 0; k < d; ++k) c += xi[k] * xj[k];
    s += m[j] * kp.kernel(c);
  }
  return m[i] * s;
}

double pairwise_sum_range(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum_range(v, h) + pairwise_sum_range(v + h, n - h);
}

}  // namespace

void KernelParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
  if (scale == KernelScale::raw && beta > kExpGuard) {
    throw OverflowError("exp(beta) overflows for beta > 700 with the raw kernel");
  }
}

double KernelParams::kernel(double c) const {
  return scale == KernelScale::raw ? std::exp(beta * c) : std::exp(beta * (c - 1.0));
}

double KernelParams::scale_factor() const {
  return scale == KernelScale::raw ? 1.0 : std::exp(-beta);
}

std::string to_string(KernelScale s) { return s == KernelScale::raw ? "raw" : "peak"; }

KernelScale kernel_scale_from_string(const std::string& s) {
  if (s == "raw") return KernelScale::raw;
  if (s == "peak") return KernelScale::peak;
  throw ConfigError("unknown kernel scale '" + s + "'");
}

double pairwise_sum(std::span<const double> v) { return pairwise_sum_range(v.data(), v.size()); }

void interaction_fields(const Ensemble& ens, const KernelParams& kp, std::span<double> field,
                        std::span<double> weight) {
  kp.validate();
  check_sizes(ens, field, weight);
  const std::size_t d = ens.dim();
  const auto n = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    field_row(ens, kp, u, field.data() + u * d, weight[u]);
  }
}

double interaction_energy(const Ensemble& ens, const KernelParams& kp) {
  kp.validate();
  std::vector<double> rows(ens.size());
  const auto n = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    rows[static_cast<std::size_t>(i)] = energy_row(ens, kp, static_cast<std::size_t>(i));
  }
  return pairwise_sum(rows) / (2.0 * kp.beta);
}

namespace serial {

void interaction_fields(const Ensemble& ens, const KernelParams& kp, std::span<double> field,
                        std::span<double> weight) {
  kp.validate();
  check_sizes(ens, field, weight);
  const std::size_t d = ens.dim();
  for (std::size_t i = 0; i < ens.size(); ++i) field_row(ens, kp, i, field.data() + i * d, weight[i]);
}

double interaction_energy(const Ensemble& ens, const KernelParams& kp) {
  kp.validate();
  std::vector<double> rows(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) rows[i] = energy_row(ens, kp, i);
  return pairwise_sum(rows) / (2.0 * kp.beta);
}

}  // namespace serial

}  // namespace aml
