#pragma once

// Perceptron drift u(x) = P_x^perp sum_j omega_j sigma(a_j.x + b_j) a_j and its
// potential v(x) = sum_j omega_j phi(a_j.x + b_j) with phi' = 2 sigma, so that
// grad v / 2 = u on the sphere.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aml/sphere.hpp"

namespace aml {

enum class Activation { relu, gelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct ActivationValue {
  double value;
  double derivative;
};

/// sigma(s) and sigma'(s). The ReLU derivative at 0 is taken to be 0.
ActivationValue activation(Activation kind, double s);
double activation_second_derivative(Activation kind, double s);

/// phi(s) with phi(0) = 0 and phi' = 2 sigma.
double primitive(Activation kind, double s);

/// Global Lipschitz constant of sigma (sup |sigma'|).
double lipschitz_constant(Activation kind);

struct Neuron {
  std::vector<double> a;
  double omega = 0.0;
  double b = 0.0;

  bool operator==(const Neuron&) const = default;
};

struct PerceptronParams {
  std::vector<Neuron> neurons;
  Activation activation = Activation::relu;

  std::size_t dim() const { return neurons.empty() ? 0 : neurons.front().a.size(); }
  bool has_bias() const;
  /// At least one neuron, consistent dimensions, finite entries.
  void validate() const;

  bool operator==(const PerceptronParams&) const = default;
};

/// Standard-normal a_j, omega_j; zero biases. `count` defaults to d neurons.
PerceptronParams sample_perceptron(std::size_t dim, std::size_t count, Activation kind,
                                   std::uint64_t seed);

TangentVector drift(const PerceptronParams& params, const UnitVector& x);
/// Writes the drift at `x` into `out` (tangent, length d).
void drift_into(const PerceptronParams& params, std::span<const double> x, std::span<double> out);

double potential(const PerceptronParams& params, std::span<const double> x);
inline double potential(const PerceptronParams& params, const UnitVector& x) {
  return potential(params, x.coords());
}

/// (1/2) d^2/dtheta^2 of v(cos theta, sin theta); d = 2 only. Sets `near_kink`
/// when some ReLU pre-activation is within 1e-9 of 0.
double half_angular_curvature(const PerceptronParams& params, double theta, bool* near_kink = nullptr);

nlohmann::json to_json(const PerceptronParams& params);
PerceptronParams perceptron_from_json(const nlohmann::json& j);

}  // namespace aml
