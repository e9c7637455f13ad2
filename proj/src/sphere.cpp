#include "aml/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "aml/errors.hpp"
#include "aml/io.hpp"

namespace aml {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kMassTol = 1e-12;

void check_unit(std::span<const double> x, const char* what) {
  if (std::abs(norm(x) - 1.0) > kUnitTol) {
    throw DomainError(std::string(what) + ": not a unit vector");
  }
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

UnitVector::UnitVector(std::vector<double> coords) {
  if (coords.empty()) throw DomainError("UnitVector: empty coordinates");
  for (double c : coords) {
    if (!std::isfinite(c)) throw DomainError("UnitVector: non-finite coordinate");
  }
  const double n = norm(coords);
  if (n == 0.0) throw DomainError("UnitVector: zero vector");
  for (double& c : coords) c /= n;
  coords_ = std::move(coords);
}

UnitVector UnitVector::exact(std::vector<double> coords) {
  if (coords.empty()) throw DomainError("UnitVector: empty coordinates");
  check_unit(coords, "UnitVector::exact");
  return UnitVector(Trusted{}, std::move(coords));
}

UnitVector UnitVector::from_angle(double theta) {
  return UnitVector(Trusted{}, {std::cos(theta), std::sin(theta)});
}

UnitVector UnitVector::basis(std::size_t dim, std::size_t axis, double sign) {
  if (axis >= dim) throw DomainError("UnitVector::basis: axis out of range");
  std::vector<double> c(dim, 0.0);
  c[axis] = sign < 0 ? -1.0 : 1.0;
  return UnitVector(Trusted{}, std::move(c));
}

double UnitVector::angle() const {
  if (dim() != 2) throw DomainError("UnitVector::angle requires d = 2");
  return std::atan2(coords_[1], coords_[0]);
}

TangentVector project_tangent(const UnitVector& x, std::span<const double> v) {
  if (v.size() != x.dim()) throw DomainError("project_tangent: dimension mismatch");
  std::vector<double> out(v.begin(), v.end());
  project_tangent_inplace(x.coords(), out);
  return TangentVector{x, std::move(out)};
}

void project_tangent_inplace(std::span<const double> x, std::span<double> v) {
  const double c = dot(x, v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * x[k];
}

UnitVector retract(const TangentVector& v, double dt) {
  if (!(dt > 0.0)) throw DomainError("retract: dt must be positive");
  std::vector<double> x(v.base.coords().begin(), v.base.coords().end());
  retract_inplace(x, v.vec, dt);
  return UnitVector::exact(std::move(x));
}

void retract_inplace(std::span<double> x, std::span<const double> v, double dt) {
  double n2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] += dt * v[k];
    n2 += x[k] * x[k];
  }
  const double n = std::sqrt(n2);
  if (!(n >= 1e-8)) throw StepTooLargeError("retract: |x + dt v| < 1e-8");
  for (double& c : x) c /= n;
}

double geodesic_distance(std::span<const double> x, std::span<const double> y) {
  // arccos(x.y), evaluated through the chord so that tiny and near-antipodal
  // angles keep full precision.
  const double c = dot(x, y);
  double chord2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = c >= 0.0 ? x[k] - y[k] : x[k] + y[k];
    chord2 += t * t;
  }
  const double half = 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(chord2)));
  return c >= 0.0 ? half : std::numbers::pi - half;
}

Ensemble::Ensemble(std::size_t dim, std::vector<double> coords, std::vector<double> masses)
    : dim_(dim), coords_(std::move(coords)), masses_(std::move(masses)) {
  if (dim_ < 2) throw DomainError("Ensemble: dimension must be at least 2");
  if (masses_.empty()) throw DomainError("Ensemble: no atoms");
  if (coords_.size() != masses_.size() * dim_) {
    throw DomainError("Ensemble: coordinate count does not match N x d");
  }
  double total = 0.0;
  for (double m : masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("Ensemble: masses must be nonnegative");
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTol) throw DomainError("Ensemble: masses must sum to 1");
  for (std::size_t i = 0; i < masses_.size(); ++i) check_unit(position(i), "Ensemble");
}

Ensemble Ensemble::equal_masses(std::size_t dim, std::vector<double> coords) {
  if (dim == 0 || coords.size() % dim != 0) throw DomainError("Ensemble: bad coordinate count");
  const std::size_t n = coords.size() / dim;
  return Ensemble(dim, std::move(coords), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Ensemble Ensemble::from_angles(std::span<const double> theta, std::vector<double> masses) {
  std::vector<double> coords;
  coords.reserve(2 * theta.size());
  for (double t : theta) {
    coords.push_back(std::cos(t));
    coords.push_back(std::sin(t));
  }
  return Ensemble(2, std::move(coords), std::move(masses));
}

Ensemble Ensemble::from_angles(std::span<const double> theta) {
  return from_angles(theta,
                     std::vector<double>(theta.size(), 1.0 / static_cast<double>(theta.size())));
}

UnitVector Ensemble::point(std::size_t i) const {
  auto p = position(i);
  return UnitVector::exact(std::vector<double>(p.begin(), p.end()));
}

std::vector<double> Ensemble::angles() const {
  if (dim_ != 2) throw DomainError("Ensemble::angles requires d = 2");
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = std::atan2(coords_[2 * i + 1], coords_[2 * i]);
  return out;
}

Ensemble Ensemble::with_coords(std::vector<double> coords) const {
  return Ensemble(dim_, std::move(coords), masses_);
}

namespace {

Ensemble merge_pass(const Ensemble& ens, double tol) {
  const std::size_t n = ens.size();
  const std::size_t d = ens.dim();
  std::vector<std::size_t> group(n, n);
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r : reps) {
      if (geodesic_distance(ens.position(i), ens.position(r)) <= tol) {
        group[i] = r;
        break;
      }
    }
    if (group[i] == n) {
      group[i] = i;
      reps.push_back(i);
    }
  }
  std::vector<double> coords;
  std::vector<double> masses;
  for (std::size_t r : reps) {
    std::vector<double> acc(d, 0.0);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (group[i] != r) continue;
      m += ens.mass(i);
      auto p = ens.position(i);
      // Unweighted mean keeps zero-mass atoms well-defined.
      for (std::size_t k = 0; k < d; ++k) acc[k] += p[k];
    }
    const double nn = norm(acc);
    for (double& c : acc) coords.push_back(c / nn);
    masses.push_back(m);
  }
  return Ensemble(d, std::move(coords), std::move(masses));
}

}  // namespace

Ensemble merge_coincident(const Ensemble& ens, double tol) {
  // Averaging can bring two representatives within tol of each other.
  Ensemble cur = merge_pass(ens, tol);
  while (true) {
    Ensemble next = merge_pass(cur, tol);
    if (next.size() == cur.size()) return next;
    cur = std::move(next);
  }
}

void write_ensemble_csv(std::ostream& out, const Ensemble& ens) {
  out << "idx,mass";
  for (std::size_t k = 0; k < ens.dim(); ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < ens.size(); ++i) {
    out << i << ',' << io::format_double(ens.mass(i));
    for (double c : ens.position(i)) out << ',' << io::format_double(c);
    out << '\n';
  }
}

Ensemble read_ensemble_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("ensemble CSV: missing header");
  auto header = io::split_csv_line(line);
  if (header.size() < 4 || header[0] != "idx" || header[1] != "mass") {
    throw IoError("ensemble CSV: header must be idx,mass,x0,...");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t k = 0; k < d; ++k) {
    if (header[k + 2] != "x" + std::to_string(k)) throw IoError("ensemble CSV: bad coordinate column");
  }
  std::vector<double> coords;
  std::vector<double> masses;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = io::split_csv_line(line);
    if (f.size() != d + 2) throw IoError("ensemble CSV: wrong field count");
    if (static_cast<std::size_t>(io::parse_double(f[0])) != masses.size()) {
      throw IoError("ensemble CSV: idx column out of order");
    }
    masses.push_back(io::parse_double(f[1]));
    for (std::size_t k = 0; k < d; ++k) coords.push_back(io::parse_double(f[k + 2]));
  }
  return Ensemble(d, std::move(coords), std::move(masses));
}

}  // namespace aml
