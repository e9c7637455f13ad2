#pragma once

// Geometry of the unit sphere S^{d-1} and the weighted empirical measure that
// lives on it.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace aml {

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);

/// A point on S^{d-1}; the Euclidean norm is 1 to within 1e-12.
class UnitVector {
 public:
  /// Normalizes `coords`. Throws DomainError for empty, zero or non-finite input.
  explicit UnitVector(std::vector<double> coords);

  /// Accepts `coords` only if it already has unit norm within 1e-12.
  static UnitVector exact(std::vector<double> coords);
  static UnitVector from_angle(double theta);
  static UnitVector basis(std::size_t dim, std::size_t axis, double sign = 1.0);

  std::size_t dim() const { return coords_.size(); }
  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  double angle() const;  // d == 2 only, in (-pi, pi]

 private:
  struct Trusted {};
  UnitVector(Trusted, std::vector<double> coords) : coords_(std::move(coords)) {}
  std::vector<double> coords_;
};

struct TangentVector {
  UnitVector base;
  std::vector<double> vec;

  double norm() const { return aml::norm(vec); }
};

/// v - (x.v) x.
TangentVector project_tangent(const UnitVector& x, std::span<const double> v);
void project_tangent_inplace(std::span<const double> x, std::span<double> v);

/// (x + dt v) / |x + dt v|. Throws StepTooLargeError when |x + dt v| < 1e-8.
UnitVector retract(const TangentVector& v, double dt);
void retract_inplace(std::span<double> x, std::span<const double> v, double dt);

/// arccos of the clamped inner product, in [0, pi], evaluated via the chord.
double geodesic_distance(std::span<const double> x, std::span<const double> y);
inline double geodesic_distance(const UnitVector& x, const UnitVector& y) {
  return geodesic_distance(x.coords(), y.coords());
}

/// Atomic probability measure sum_i m_i delta_{x_i} on S^{d-1}. Positions are
/// stored row-major (N x d) so kernels can stream over them.
class Ensemble {
 public:
  Ensemble(std::size_t dim, std::vector<double> coords, std::vector<double> masses);

  static Ensemble equal_masses(std::size_t dim, std::vector<double> coords);
  static Ensemble from_angles(std::span<const double> theta, std::vector<double> masses);
  static Ensemble from_angles(std::span<const double> theta);

  std::size_t size() const { return masses_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> coords() const { return coords_; }
  std::span<const double> position(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * dim_, dim_);
  }
  UnitVector point(std::size_t i) const;
  std::span<const double> masses() const { return masses_; }
  double mass(std::size_t i) const { return masses_[i]; }

  /// Angles of the atoms in (-pi, pi]; d == 2 only.
  std::vector<double> angles() const;

  /// Same masses, new positions (validated).
  Ensemble with_coords(std::vector<double> coords) const;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> masses_;
};

/// Merges atoms within geodesic distance `tol` of a group representative into
/// one atom at the normalized mean direction carrying the summed mass, repeated
/// until no two atoms are that close. Atoms keep first-occurrence order.
Ensemble merge_coincident(const Ensemble& ens, double tol);

/// CSV with header `idx,mass,x0,...,x{d-1}`, shortest round-trip decimals.
void write_ensemble_csv(std::ostream& out, const Ensemble& ens);
Ensemble read_ensemble_csv(std::istream& in);

}  // namespace aml
