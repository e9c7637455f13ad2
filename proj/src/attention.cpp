#include "aml/attention.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "aml/errors.hpp"
#include "aml/io.hpp"

namespace aml {

std::string to_string(FieldNormalization n) {
  return n == FieldNormalization::unnormalized ? "unnormalized" : "softmax";
}

FieldNormalization normalization_from_string(const std::string& s) {
  if (s == "unnormalized") return FieldNormalization::unnormalized;
  if (s == "softmax" || s == "normalized") return FieldNormalization::softmax;
  throw ConfigError("unknown normalization '" + s + "'");
}

KernelDerivs kernel_derivs(double beta, double theta) {
  if (!(beta > 0.0)) throw DomainError("kernel_derivs: beta must be positive");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  if (beta * c > 700.0) throw OverflowError("kernel_derivs: beta cos(theta) > 700");
  const double K = std::exp(beta * c);
  return {K, -beta * K * s, K * (beta * beta * s * s - beta * c)};
}

KernelDerivs kernel_derivs(const KernelParams& kp, double theta) {
  if (kp.scale == KernelScale::raw) return kernel_derivs(kp.beta, theta);
  if (!(kp.beta > 0.0)) throw DomainError("kernel_derivs: beta must be positive");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double K = std::exp(kp.beta * (c - 1.0));
  return {K, -kp.beta * K * s, K * (kp.beta * kp.beta * s * s - kp.beta * c)};
}

double theta_c(double beta) {
  if (!(beta > 0.0)) throw DomainError("theta_c: beta must be positive");
  // 1 - cos(theta_c) without cancellation, then the half-angle form of arccos.
  const double one_minus_c = 2.0 / (2.0 * beta + 1.0 + std::sqrt(1.0 + 4.0 * beta * beta));
  return 2.0 * std::asin(std::sqrt(0.5 * one_minus_c));
}

double first_variation_weight(const Ensemble& ens, std::span<const double> x, const KernelParams& kp) {
  kp.validate();
  if (x.size() != ens.dim()) throw DomainError("first_variation_weight: dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < ens.size(); ++j) s += ens.mass(j) * kp.kernel(dot(x, ens.position(j)));
  return s / kp.beta;
}

TangentVector attention_field(const Ensemble& ens, const UnitVector& x, const KernelParams& kp,
                              FieldNormalization norm, bool practical_softmax) {
  kp.validate();
  const std::size_t d = ens.dim();
  if (x.dim() != d) throw DomainError("attention_field: dimension mismatch");
  std::vector<double> f(d, 0.0);
  double ws = 0.0;
  for (std::size_t j = 0; j < ens.size(); ++j) {
    auto xj = ens.position(j);
    const double e = ens.mass(j) * kp.kernel(dot(x.coords(), xj));
    ws += e;
    for (std::size_t k = 0; k < d; ++k) f[k] += e * xj[k];
  }
  project_tangent_inplace(x.coords(), f);
  if (norm == FieldNormalization::softmax) {
    const double w = ws / kp.beta;
    const double div = practical_softmax ? w * kp.beta : w;
    for (double& c : f) c /= div;
  }
  return TangentVector{x, std::move(f)};
}

double total_energy(const Ensemble& ens, const KernelParams& kp, const PerceptronParams* params) {
  double e = interaction_energy(ens, kp);
  if (params) {
    if (params->dim() != ens.dim()) throw DomainError("total_energy: dimension mismatch");
    std::vector<double> terms(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) terms[i] = ens.mass(i) * potential(*params, ens.position(i));
    e += 0.5 * pairwise_sum(terms);
  }
  return e;
}

HessianMatrix::HessianMatrix(Eigen::MatrixXd entries, std::vector<std::string> warnings)
    : entries_(std::move(entries)), warnings_(std::move(warnings)) {
  if (entries_.rows() != entries_.cols()) throw DomainError("HessianMatrix: not square");
  const double scale = 1.0 + entries_.cwiseAbs().maxCoeff();
  if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("HessianMatrix: not symmetric");
  }
}

void HessianMatrix::write_csv(std::ostream& out) const {
  out << "n=" << size() << '\n';
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      if (j) out << ',';
      out << io::format_double(entries_(i, j));
    }
    out << '\n';
  }
}

HessianMatrix HessianMatrix::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("n=", 0) != 0) throw IoError("Hessian CSV: missing n=<N> header");
  const auto n = static_cast<Eigen::Index>(io::parse_double(std::string_view(line).substr(2)));
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw IoError("Hessian CSV: truncated");
    auto f = io::split_csv_line(line);
    if (static_cast<Eigen::Index>(f.size()) != n) throw IoError("Hessian CSV: wrong field count");
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = io::parse_double(f[static_cast<std::size_t>(j)]);
  }
  return HessianMatrix(std::move(m));
}

HessianMatrix hessian_d2(const Ensemble& ens, const KernelParams& kp, const PerceptronParams* params) {
  if (ens.dim() != 2) throw DomainError("hessian_d2 requires d = 2");
  kp.validate();
  if (params && params->dim() != 2) throw DomainError("hessian_d2: perceptron dimension mismatch");
  const std::size_t n = ens.size();
  const auto theta = ens.angles();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(std::remainder(theta[i] - theta[j], 2.0 * std::numbers::pi)) < 1e-9) {
        throw CoincidentAtomsError("hessian_d2: atoms " + std::to_string(i) + " and " +
                                   std::to_string(j) + " coincide; merge them first");
      }
    }
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double k2 = kernel_derivs(kp, theta[i] - theta[j]).K2;
      const double off = -ens.mass(i) * ens.mass(j) * k2 / kp.beta;
      h(ii, jj) = off;
      h(jj, ii) = off;
      h(ii, ii) -= off;
      h(jj, jj) -= off;
    }
  }
  std::vector<std::string> warnings;
  if (params) {
    for (std::size_t i = 0; i < n; ++i) {
      bool kink = false;
      const auto ii = static_cast<Eigen::Index>(i);
      h(ii, ii) += ens.mass(i) * half_angular_curvature(*params, theta[i], &kink);
      if (kink) warnings.push_back("atom " + std::to_string(i) + " sits on a ReLU kink");
    }
  }
  return HessianMatrix(std::move(h), std::move(warnings));
}

SopdResult sopd_check(const HessianMatrix& h, double tol) {
  if (h.size() == 0) return {true, 0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.entries(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double rho = std::max(std::abs(lo), std::abs(ev.maxCoeff()));
  return {lo >= -tol * (1.0 + rho), lo, rho};
}

CurvatureBounds curvature_bounds(double beta, double lambda) {
  if (!(beta > 0.0)) throw DomainError("curvature_bounds: beta must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("curvature_bounds: lambda must lie in (0, 1)");
  const double l2 = lambda * lambda;
  return {-std::exp(-0.5 * l2) * (1.0 - l2) * 0.5 * beta * std::exp(beta),
          2.0 * beta * std::exp(beta - 1.5)};
}

}  // namespace aml
