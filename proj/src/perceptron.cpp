#include "aml/perceptron.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aml/errors.hpp"
#include "aml/rng.hpp"

namespace aml {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double s) { return 0.5 * (1.0 + std::erf(s * kInvSqrt2)); }
double normal_pdf(double s) { return kInvSqrt2Pi * std::exp(-0.5 * s * s); }

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu" || s == "ReLU") return Activation::relu;
  if (s == "gelu" || s == "GeLU") return Activation::gelu;
  throw ConfigError("unknown activation '" + s + "'");
}

ActivationValue activation(Activation kind, double s) {
  if (kind == Activation::relu) {
    return s > 0.0 ? ActivationValue{s, 1.0} : ActivationValue{0.0, 0.0};
  }
  const double cdf = normal_cdf(s);
  return {s * cdf, cdf + s * normal_pdf(s)};
}

double activation_second_derivative(Activation kind, double s) {
  if (kind == Activation::relu) return 0.0;
  return normal_pdf(s) * (2.0 - s * s);
}

double primitive(Activation kind, double s) {
  if (kind == Activation::relu) return s > 0.0 ? s * s : 0.0;
  // d/ds [s^2 Phi + s pdf - Phi] = 2 s Phi; the 1/2 pins phi(0) = 0.
  return s * s * normal_cdf(s) + s * normal_pdf(s) - normal_cdf(s) + 0.5;
}

double lipschitz_constant(Activation kind) {
  if (kind == Activation::relu) return 1.0;
  // sigma'' = pdf (2 - s^2) vanishes at s = sqrt(2), where sigma' peaks.
  constexpr double s = std::numbers::sqrt2;
  return normal_cdf(s) + s * normal_pdf(s);
}

bool PerceptronParams::has_bias() const {
  for (const auto& n : neurons) {
    if (n.b != 0.0) return true;
  }
  return false;
}

void PerceptronParams::validate() const {
  if (neurons.empty()) throw DomainError("PerceptronParams: at least one neuron required");
  const std::size_t d = neurons.front().a.size();
  if (d < 2) throw DomainError("PerceptronParams: neuron dimension must be at least 2");
  for (const auto& n : neurons) {
    if (n.a.size() != d) throw DomainError("PerceptronParams: inconsistent neuron dimensions");
    for (double c : n.a) {
      if (!std::isfinite(c)) throw DomainError("PerceptronParams: non-finite weight");
    }
    if (!std::isfinite(n.omega) || !std::isfinite(n.b)) {
      throw DomainError("PerceptronParams: non-finite weight");
    }
  }
}

PerceptronParams sample_perceptron(std::size_t dim, std::size_t count, Activation kind,
                                   std::uint64_t seed) {
  if (count == 0) count = dim;
  PerceptronParams p;
  p.activation = kind;
  std::uint64_t k = 0;
  for (std::size_t j = 0; j < count; ++j) {
    Neuron n;
    n.a.resize(dim);
    for (auto& c : n.a) c = rng::normal(seed, rng::streams::perceptron, k++);
    n.omega = rng::normal(seed, rng::streams::perceptron, k++);
    p.neurons.push_back(std::move(n));
  }
  return p;
}

void drift_into(const PerceptronParams& params, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& n : params.neurons) {
    const double s = dot(n.a, x) + n.b;
    const double w = n.omega * activation(params.activation, s).value;
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * n.a[k];
  }
  project_tangent_inplace(x, out);
}

TangentVector drift(const PerceptronParams& params, const UnitVector& x) {
  if (params.dim() != x.dim()) throw DomainError("drift: dimension mismatch");
  std::vector<double> out(x.dim());
  drift_into(params, x.coords(), out);
  return TangentVector{x, std::move(out)};
}

double potential(const PerceptronParams& params, std::span<const double> x) {
  if (params.dim() != x.size()) throw DomainError("potential: dimension mismatch");
  double v = 0.0;
  for (const auto& n : params.neurons) v += n.omega * primitive(params.activation, dot(n.a, x) + n.b);
  return v;
}

double half_angular_curvature(const PerceptronParams& params, double theta, bool* near_kink) {
  if (params.dim() != 2) throw DomainError("half_angular_curvature requires d = 2");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  double total = 0.0;
  for (const auto& n : params.neurons) {
    const double ax = n.a[0] * c + n.a[1] * s;         // a.x
    const double axp = -n.a[0] * s + n.a[1] * c;       // a.x'
    const double pre = ax + n.b;
    if (near_kink && params.activation == Activation::relu && std::abs(pre) < 1e-9 &&
        n.omega != 0.0) {
      *near_kink = true;
    }
    const auto act = activation(params.activation, pre);
    // x'' = -x
    total += n.omega * (act.derivative * axp * axp - act.value * ax);
  }
  return total;
}

nlohmann::json to_json(const PerceptronParams& params) {
  nlohmann::json neurons = nlohmann::json::array();
  for (const auto& n : params.neurons) {
    neurons.push_back({{"a", n.a}, {"omega", n.omega}, {"b", n.b}});
  }
  return {{"activation", to_string(params.activation)}, {"neurons", neurons}};
}

PerceptronParams perceptron_from_json(const nlohmann::json& j) {
  try {
    PerceptronParams p;
    p.activation = activation_from_string(j.at("activation").get<std::string>());
    for (const auto& n : j.at("neurons")) {
      Neuron neuron;
      neuron.a = n.at("a").get<std::vector<double>>();
      neuron.omega = n.at("omega").get<double>();
      neuron.b = n.value("b", 0.0);
      p.neurons.push_back(std::move(neuron));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("perceptron JSON: ") + e.what());
  }
}

}  // namespace aml
