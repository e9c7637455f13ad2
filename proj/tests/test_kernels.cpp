#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include <omp.h>

#include "aml/errors.hpp"
#include "aml/kernels.hpp"
#include "aml/rng.hpp"

using aml::Ensemble;
using aml::KernelParams;
using aml::KernelScale;

namespace {

Ensemble random_ensemble(std::size_t n, std::size_t d, std::uint64_t seed, bool random_masses) {
  std::vector<double> coords(n * d);
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      coords[i * d + c] = aml::rng::normal(seed, aml::rng::streams::test, k++);
      s += coords[i * d + c] * coords[i * d + c];
    }
    for (std::size_t c = 0; c < d; ++c) coords[i * d + c] /= std::sqrt(s);
  }
  std::vector<double> m(n, 1.0 / static_cast<double>(n));
  if (random_masses) {
    double tot = 0.0;
    for (auto& x : m) tot += (x = 0.1 + aml::rng::uniform(seed, aml::rng::streams::test, k++));
    for (auto& x : m) x /= tot;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) s += m[i];
    m.back() = 1.0 - s;
  }
  return Ensemble(d, std::move(coords), std::move(m));
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("kernel scales") {
  KernelParams raw{2.0, KernelScale::raw};
  KernelParams peak{2.0, KernelScale::peak};
  CHECK(raw.kernel(0.5) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(peak.kernel(1.0) == 1.0);
  CHECK(peak.kernel(-1.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(raw.scale_factor() == 1.0);
  CHECK(peak.scale_factor() == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(aml::kernel_scale_from_string(aml::to_string(KernelScale::peak)) == KernelScale::peak);
  CHECK_THROWS_AS(aml::kernel_scale_from_string("log"), aml::ConfigError);
  CHECK_THROWS_AS((KernelParams{0.0, KernelScale::raw}.validate()), aml::DomainError);
  CHECK_THROWS_AS((KernelParams{701.0, KernelScale::raw}.validate()), aml::OverflowError);
  CHECK_NOTHROW((KernelParams{5000.0, KernelScale::peak}.validate()));
}

TEST_CASE("fields and energy match a direct double sum") {
  for (std::size_t d : {2u, 3u, 5u}) {
    const auto ens = random_ensemble(17, d, 3 + d, true);
    for (auto scale : {KernelScale::raw, KernelScale::peak}) {
      const KernelParams kp{3.5, scale};
      std::vector<double> f(17 * d), w(17);
      aml::interaction_fields(ens, kp, f, w);
      double e = 0.0;
      for (std::size_t i = 0; i < 17; ++i) {
        auto xi = ens.position(i);
        std::vector<double> acc(d, 0.0);
        double wi = 0.0;
        for (std::size_t j = 0; j < 17; ++j) {
          auto xj = ens.position(j);
          double c = 0.0;
          for (std::size_t k = 0; k < d; ++k) c += xi[k] * xj[k];
          const double kv = std::exp(3.5 * c) * (scale == KernelScale::peak ? std::exp(-3.5) : 1.0);
          for (std::size_t k = 0; k < d; ++k) acc[k] += ens.mass(j) * kv * xj[k];
          wi += ens.mass(j) * kv;
          e += ens.mass(i) * ens.mass(j) * kv;
        }
        double c = 0.0;
        for (std::size_t k = 0; k < d; ++k) c += acc[k] * xi[k];
        for (std::size_t k = 0; k < d; ++k) {
          CHECK(f[i * d + k] == doctest::Approx(acc[k] - c * xi[k]).epsilon(1e-12).scale(1.0));
        }
        CHECK(w[i] == doctest::Approx(wi / 3.5).epsilon(1e-13));
      }
      CHECK(aml::interaction_energy(ens, kp) == doctest::Approx(e / 7.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference across thread counts") {
  const int saved = omp_get_max_threads();
  for (std::size_t d : {2u, 3u}) {
    for (std::size_t n : {1u, 7u, 257u, 1000u}) {
      const auto ens = random_ensemble(n, d, 100 + n, n % 2 == 1);
      const KernelParams kp{9.0, KernelScale::peak};
      std::vector<double> f0(n * d), w0(n);
      aml::serial::interaction_fields(ens, kp, f0, w0);
      const double e0 = aml::serial::interaction_energy(ens, kp);
      for (int t : {1, 2, 3, 8}) {
        omp_set_num_threads(t);
        std::vector<double> f(n * d), w(n);
        aml::interaction_fields(ens, kp, f, w);
        CHECK(same_bits(f, f0));
        CHECK(same_bits(w, w0));
        const double e = aml::interaction_energy(ens, kp);
        CHECK(std::memcmp(&e, &e0, sizeof e) == 0);
      }
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("pairwise sum") {
  std::vector<double> v;
  CHECK(aml::pairwise_sum(v) == 0.0);
  for (int i = 1; i <= 1000; ++i) v.push_back(1.0 / i);
  long double ref = 0.0L;
  for (double x : v) ref += x;
  CHECK(aml::pairwise_sum(v) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-15));
  std::vector<double> many(1 << 20, 0.1);
  CHECK(std::abs(aml::pairwise_sum(many) - 0.1 * (1 << 20)) <= 1e-9);
}

TEST_CASE("raw kernel refuses beta beyond the exponent guard") {
  const auto ens = random_ensemble(4, 2, 1, false);
  std::vector<double> f(8), w(4);
  CHECK_THROWS_AS(aml::interaction_fields(ens, KernelParams{800.0, KernelScale::raw}, f, w), aml::OverflowError);
  CHECK_NOTHROW(aml::interaction_fields(ens, KernelParams{800.0, KernelScale::peak}, f, w));
}
