#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aml/errors.hpp"
#include "aml/spectral.hpp"
#include "oracles.hpp"

using aml::Ensemble;

namespace {

constexpr double kPi = std::numbers::pi;

Ensemble random_atoms(std::mt19937& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> th(n), m(n);
  double tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    th[i] = 2 * kPi * u(gen);
    tot += (m[i] = 0.05 + u(gen));
  }
  double s = 0.0;
  for (auto& x : m) s += (x /= tot);
  m[0] += 1.0 - s;
  return Ensemble::from_angles(th, m);
}

}  // namespace

TEST_CASE("Bessel examples") {
  CHECK(aml::bessel_i(0, 0.0) == 1.0);
  CHECK(aml::bessel_i(1, 0.0) == 0.0);
  CHECK(aml::bessel_i(0, 1.0) == doctest::Approx(1.2660658).epsilon(1e-7));
  CHECK(aml::bessel_i(1, 1.0) == doctest::Approx(0.5651591).epsilon(1e-7));
  CHECK(aml::bessel_i(0, 1.0) == doctest::Approx(oracle::bessel_series(0, 1.0, 30)).epsilon(1e-14));
  CHECK_THROWS_AS(aml::bessel_i(201, 1.0), aml::RangeError);
  CHECK_THROWS_AS(aml::bessel_i(-1, 1.0), aml::RangeError);
  CHECK_THROWS_AS(aml::bessel_i(0, 701.0), aml::RangeError);
  CHECK_THROWS_AS(aml::bessel_i(0, -1.0), aml::RangeError);
}

TEST_CASE("Bessel values agree with a long-double series oracle") {
  for (double beta : {0.1, 0.5, 1.0, 5.0, 12.0, 15.0, 17.5, 19.9, 20.0, 20.1, 22.0, 25.0}) {
    for (int n : {0, 1, 2, 3, 5, 8, 13, 20, 40}) {
      const double ref = oracle::bessel_series(n, beta, 400);
      if (ref < 1e-290) continue;
      CHECK(aml::bessel_i(n, beta) == doctest::Approx(ref).epsilon(1e-11));
    }
  }
}

TEST_CASE("Bessel recurrence, positivity and bulk evaluation") {
  for (double beta : {1.0, 10.0, 100.0}) {
    const auto all = aml::bessel_i_all(51, beta);
    for (int n = 1; n <= 50; ++n) {
      if (all[n + 1] < 1e-290) break;
      const double lhs = all[n - 1] - all[n + 1];
      const double rhs = 2.0 * n / beta * all[n];
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
    }
    for (int n = 0; n <= 51; ++n) CHECK(all[n] == doctest::Approx(aml::bessel_i(n, beta)).epsilon(1e-14));
  }
  for (double beta : {1e-3, 0.5, 3.0, 30.0, 300.0, 700.0}) {
    for (int n = 0; n <= 200; n += 7) {
      const double v = aml::bessel_i(n, beta);
      CHECK(std::isfinite(v));
      if (beta >= 30.0 || n <= 20) CHECK(v > 0.0);
    }
  }
  // Large-argument asymptotics: I_0(z) ~ e^z / sqrt(2 pi z) (1 + 1/(8z) + 9/(128 z^2)).
  const double z = 700.0;
  const double asym = std::exp(z) / std::sqrt(2 * kPi * z) * (1 + 1 / (8 * z) + 9 / (128 * z * z) + 225 / (3072 * z * z * z));
  CHECK(aml::bessel_i(0, z) == doctest::Approx(asym).epsilon(1e-11));
}

TEST_CASE("moments examples") {
  auto m = aml::moments(Ensemble::from_angles(std::vector<double>{0.0}), 5);
  for (int n = -5; n <= 5; ++n) CHECK(std::abs(m[n] - std::complex<double>(1.0, 0.0)) == 0.0);
  std::vector<double> grid(12);
  for (int k = 0; k < 12; ++k) grid[k] = 2 * kPi * k / 12;
  m = aml::moments(Ensemble::from_angles(grid), 11);
  CHECK(std::abs(m[0] - 1.0) <= 1e-15);
  for (int n = 1; n <= 11; ++n) {
    CHECK(std::abs(m[n]) <= 1e-15);
    CHECK(std::abs(m[-n]) <= 1e-15);
  }
  m = aml::moments(Ensemble::from_angles(std::vector<double>{0.0, kPi}), 4);
  CHECK(std::abs(m[1]) <= 1e-15);
  CHECK(std::abs(m[2] - 1.0) <= 1e-15);
  CHECK(m.conjugate_asymmetry() == 0.0);
  CHECK_THROWS_AS(aml::moments(Ensemble(3, {1, 0, 0}, {1.0}), 3), aml::DomainError);
}

TEST_CASE("convolution coefficients of a Dirac follow Jacobi-Anger") {
  const auto c = aml::convolution_coeffs(Ensemble::from_angles(std::vector<double>{0.0}), 1.0, 20);
  for (int n = -20; n <= 20; ++n) {
    CHECK(std::abs(c.coeffs[n] - oracle::bessel_series(std::abs(n), 1.0)) <= 1e-10);
  }
  CHECK(c.residual_max <= 1e-14);
  CHECK(c.coeffs.conjugate_asymmetry() <= 1e-12);
  CHECK_THROWS_AS(aml::convolution_coeffs(Ensemble::from_angles(std::vector<double>{0.0}), 1.0, 65), aml::DomainError);
}

TEST_CASE("Funk-Hecke residual on random atomic measures") {
  std::mt19937 gen(13);
  for (int inst = 0; inst < 20; ++inst) {
    const auto ens = random_atoms(gen, 1 + inst % 8);
    const auto m = aml::moments(ens, 20);
    for (double beta : {0.5, 1.0, 5.0}) {
      const auto c = aml::convolution_coeffs(ens, beta, 20);
      double worst = 0.0;
      for (int n = -20; n <= 20; ++n) {
        worst = std::max(worst, std::abs(c.coeffs[n] - oracle::bessel_series(std::abs(n), beta) * m[n]));
      }
      CHECK(worst <= 1e-8);
      CHECK(c.residual_max <= 1e-8);
      CHECK(c.coeffs.conjugate_asymmetry() <= 1e-12);
    }
  }
}

TEST_CASE("antipodal symmetrization kills odd coefficients") {
  std::mt19937 gen(21);
  for (int inst = 0; inst < 10; ++inst) {
    const auto base = random_atoms(gen, 1 + inst % 6);
    auto th = base.angles();
    std::vector<double> m(base.masses().begin(), base.masses().end());
    const std::size_t n = th.size();
    for (std::size_t i = 0; i < n; ++i) {
      th.push_back(th[i] + kPi);
      m.push_back(m[i] / 2);
      m[i] /= 2;
    }
    const auto c = aml::convolution_coeffs(Ensemble::from_angles(th, m), 2.0, 15);
    for (int k = 1; k <= 15; k += 2) CHECK(std::abs(c.coeffs[k]) <= 1e-10);
  }
}

TEST_CASE("uniform measure and density reconstruction") {
  const int N = 4096;
  std::vector<double> th(N), flat(N, 1.0 / N), card(N);
  for (int k = 0; k < N; ++k) {
    th[k] = 2 * kPi * k / N;
    card[k] = (1 + std::cos(th[k])) / N;
  }
  const auto cu = aml::convolution_coeffs(Ensemble::from_angles(th, flat), 1.0, 10);
  CHECK(cu.coeffs[0].real() == doctest::Approx(aml::bessel_i(0, 1.0)).epsilon(1e-13));
  const auto ru = aml::reconstruct_density(cu.coeffs, 1.0);
  CHECK(std::abs(ru.density[0] - 1.0) <= 1e-12);
  for (int n = 1; n <= 6; ++n) CHECK(std::abs(ru.density[n]) <= 1e-8);

  const auto cc = aml::convolution_coeffs(Ensemble::from_angles(th, card), 1.0, 10);
  const auto rc = aml::reconstruct_density(cc.coeffs, 1.0);
  CHECK(std::abs(rc.density[0] - 1.0) <= 1e-12);
  CHECK(std::abs(rc.density[1] - 0.5) <= 1e-12);
  CHECK(std::abs(rc.density[-1] - 0.5) <= 1e-12);
  for (int n = 2; n <= 6; ++n) CHECK(std::abs(rc.density[n]) <= 1e-8);
  CHECK(rc.warnings.empty());
}

TEST_CASE("round trip recovers moments where I_n(beta) is resolvable") {
  std::mt19937 gen(3);
  for (int inst = 0; inst < 10; ++inst) {
    const auto ens = random_atoms(gen, 5);
    const auto m = aml::moments(ens, 16);
    const auto r = aml::reconstruct_density(aml::convolution_coeffs(ens, 1.0, 16).coeffs, 1.0);
    // The quadrature carries absolute error ~1e-16 I_0(1); dividing by
    // I_n(1) leaves 1e-8 accuracy up to n = 6 (I_6(1) = 2.2e-7).
    for (int n = -6; n <= 6; ++n) CHECK(std::abs(r.density[n] - m[n]) <= 1e-8);
  }
  aml::FourierSeries s(200);
  s[200] = 1.0;
  CHECK_FALSE(aml::reconstruct_density(s, 1.0).warnings.empty());
}

TEST_CASE("spectral report JSON") {
  const auto rep = aml::spectral_report(Ensemble::from_angles(std::vector<double>{0.3, 2.0}), 5.0, 8);
  const auto j = nlohmann::json::parse(rep.to_json().dump());
  CHECK(j.at("beta") == 5.0);
  CHECK(j.at("n_max") == 8);
  CHECK(j.at("moments").size() == 17);
  CHECK(j.at("conv_coeffs").size() == 17);
  CHECK(j.at("residual_max").get<double>() <= 1e-8);
}
