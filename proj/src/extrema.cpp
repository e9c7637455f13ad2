#include "aml/extrema.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "aml/errors.hpp"
#include "aml/rng.hpp"

namespace aml {

namespace {

constexpr std::uint64_t kStreamCells = 4;
constexpr std::uint64_t kStreamSlices = 5;
constexpr std::uint64_t kStreamRotations = 6;
constexpr double kTieTol = 1e-9;
constexpr double kDedupTol = 1e-6;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool relu_cells_apply(const PerceptronParams& p) {
  return p.activation == Activation::relu && !p.has_bias();
}

std::vector<int> pattern_at(const PerceptronParams& p, std::span<const double> x, double* margin) {
  std::vector<int> s(p.neurons.size(), -1);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p.neurons.size(); ++j) {
    const double an = norm(p.neurons[j].a);
    if (an == 0.0) continue;
    const double c = dot(p.neurons[j].a, x) / an;
    s[j] = c > 0.0 ? 1 : -1;
    m = std::min(m, std::abs(c));
  }
  if (margin) *margin = m;
  return s;
}

Cell make_cell(std::vector<int> pattern, UnitVector rep, bool sampled) {
  Cell c;
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    if (pattern[j] > 0) c.active_set.push_back(j);
  }
  c.sign_pattern = std::move(pattern);
  c.representative = std::move(rep);
  c.sampled = sampled;
  return c;
}

Eigen::MatrixXd quadratic_form(const Cell& cell, const PerceptronParams& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t j : cell.active_set) {
    const auto& n = p.neurons[j];
    Eigen::Map<const Eigen::VectorXd> a(n.a.data(), d);
    B += n.omega * a * a.transpose();
  }
  return B;
}

bool in_closed_cell(const Cell& cell, const PerceptronParams& p, std::span<const double> x) {
  for (std::size_t j = 0; j < p.neurons.size(); ++j) {
    const double an = norm(p.neurons[j].a);
    if (an == 0.0) continue;
    if (cell.sign_pattern[j] * dot(p.neurons[j].a, x) < -1e-10 * an) return false;
  }
  return true;
}

double eval(const PerceptronParams& p, std::span<const double> x) { return potential(p, x); }

void push_unique(std::vector<UnitVector>& out, const UnitVector& x) {
  for (const auto& y : out) {
    if (geodesic_distance(x, y) < kDedupTol) return;
  }
  out.push_back(x);
}

bool lex_less(const UnitVector& a, const UnitVector& b) {
  return std::lexicographical_compare(a.coords().begin(), a.coords().end(), b.coords().begin(),
                                      b.coords().end());
}

std::vector<Cell> cells_d2(const PerceptronParams& p) {
  std::vector<double> cuts;
  for (const auto& n : p.neurons) {
    if (norm(n.a) == 0.0) continue;
    const double phi = std::atan2(n.a[1], n.a[0]);
    for (double b : {phi + 0.5 * std::numbers::pi, phi - 0.5 * std::numbers::pi}) {
      double t = std::fmod(b, kTwoPi);
      if (t < 0.0) t += kTwoPi;
      cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> uniq;
  for (double c : cuts) {
    if (uniq.empty() || c - uniq.back() > 1e-12) uniq.push_back(c);
  }
  if (uniq.size() > 1 && uniq.front() + kTwoPi - uniq.back() <= 1e-12) uniq.pop_back();
  std::vector<Cell> out;
  if (uniq.empty()) {
    Cell c = make_cell(std::vector<int>(p.neurons.size(), -1), UnitVector::from_angle(0.0), false);
    c.arc_lo = 0.0;
    c.arc_hi = kTwoPi;
    out.push_back(std::move(c));
    return out;
  }
  for (std::size_t k = 0; k < uniq.size(); ++k) {
    const double lo = uniq[k];
    const double hi = k + 1 < uniq.size() ? uniq[k + 1] : uniq.front() + kTwoPi;
    const auto mid = UnitVector::from_angle(0.5 * (lo + hi));
    Cell c = make_cell(pattern_at(p, mid.coords(), nullptr), mid, false);
    c.arc_lo = lo;
    c.arc_hi = hi;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Cell> cells_sampled(const PerceptronParams& p, std::size_t samples, std::uint64_t seed) {
  const std::size_t d = p.dim();
  std::map<std::vector<int>, std::pair<double, std::vector<double>>> found;
  auto offer = [&](std::vector<double> x) {
    const double n = norm(x);
    if (!(n > 0.0)) return false;
    for (double& c : x) c /= n;
    double margin = 0.0;
    auto s = pattern_at(p, x, &margin);
    if (!(margin > 1e-12)) return false;
    auto it = found.find(s);
    if (it == found.end()) {
      found.emplace(std::move(s), std::make_pair(margin, std::move(x)));
      return true;
    }
    if (margin > it->second.first) it->second = {margin, std::move(x)};
    return false;
  };
  std::vector<double> x(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < d; ++k) x[k] = rng::normal(seed, kStreamCells, s * d + k);
    offer(x);
  }
  // Step across each facet of every known cell to pick up thin neighbours.
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::vector<double>> reps;
    for (const auto& [pat, entry] : found) reps.push_back(entry.second);
    for (const auto& r : reps) {
      for (const auto& n : p.neurons) {
        const double a2 = dot(n.a, n.a);
        if (a2 == 0.0) continue;
        const double t = dot(n.a, r) / a2;
        const double push = (t > 0 ? -1.0 : 1.0) * 1e-6 / std::sqrt(a2);
        std::vector<double> y(d);
        for (std::size_t k = 0; k < d; ++k) y[k] = r[k] - t * n.a[k] + push * n.a[k];
        grew = offer(std::move(y)) || grew;
      }
    }
  }
  std::vector<Cell> out;
  for (auto& [pat, entry] : found) out.push_back(make_cell(pat, UnitVector(entry.second), true));
  return out;
}

CellMax cell_max_d2(const Cell& cell, const PerceptronParams& p) {
  const Eigen::MatrixXd B = quadratic_form(cell, p);
  const double mean = 0.5 * (B(0, 0) + B(1, 1));
  const double q = 0.5 * (B(0, 0) - B(1, 1));
  const double r = B(0, 1);
  const double lo = cell.arc_lo;
  const double hi = cell.arc_hi;
  std::vector<double> cand;
  if (hi - lo < kTwoPi) {
    cand.push_back(lo);
    cand.push_back(hi);
  }
  const bool flat = std::hypot(q, r) <= 1e-12 * (1.0 + std::abs(mean));
  if (flat) {
    cand.push_back(0.5 * (lo + hi));
  } else {
    // Critical points of mean + q cos 2t + r sin 2t.
    const double phi = 0.5 * std::atan2(r, q);
    const double half_pi = 0.5 * std::numbers::pi;
    for (double t = phi + half_pi * std::ceil((lo - phi) / half_pi); t <= hi; t += half_pi) cand.push_back(t);
  }
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, UnitVector>> vals;
  for (double t : cand) {
    auto x = UnitVector::from_angle(t);
    const double v = eval(p, x.coords());
    best = std::max(best, v);
    vals.emplace_back(v, std::move(x));
  }
  CellMax out{best, vals.front().second, {}, flat};
  bool first = true;
  for (auto& [v, x] : vals) {
    if (v >= best - kTieTol) {
      if (first) out.x_star = x;
      first = false;
      push_unique(out.ties, x);
    }
  }
  return out;
}

// Every subset of `m` indices with at most `kmax` elements.
void subsets(std::size_t m, std::size_t kmax, std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    out.push_back(cur);
    if (cur.size() == kmax) return;
    for (std::size_t j = start; j < m; ++j) {
      cur.push_back(j);
      rec(j + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

CellMax cell_max_faces(const Cell& cell, const PerceptronParams& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  const Eigen::MatrixXd B = quadratic_form(cell, p);
  std::vector<Eigen::VectorXd> rows;
  for (const auto& n : p.neurons) {
    if (norm(n.a) > 0.0) rows.push_back(Eigen::Map<const Eigen::VectorXd>(n.a.data(), d));
  }
  std::vector<std::vector<std::size_t>> faces;
  subsets(rows.size(), static_cast<std::size_t>(d - 1), faces);
  if (faces.size() > 200000) throw DomainError("cell_max: arrangement too large for face enumeration");

  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::pair<UnitVector, bool>>> cands;
  auto consider = [&](const Eigen::VectorXd& v, bool degenerate) {
    const double n = v.norm();
    if (!(n > 1e-12)) return;
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> x(static_cast<std::size_t>(d));
      for (Eigen::Index k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = sgn * v(k) / n;
      if (!in_closed_cell(cell, p, x)) continue;
      const double val = eval(p, x);
      best = std::max(best, val);
      cands.push_back({val, {UnitVector(std::move(x)), degenerate}});
    }
  };

  for (const auto& face : faces) {
    Eigen::MatrixXd basis;
    if (face.empty()) {
      basis = Eigen::MatrixXd::Identity(d, d);
    } else {
      Eigen::MatrixXd A(static_cast<Eigen::Index>(face.size()), d);
      for (std::size_t r = 0; r < face.size(); ++r) A.row(static_cast<Eigen::Index>(r)) = rows[face[r]].transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      Eigen::Index rank = 0;
      for (Eigen::Index k = 0; k < sv.size(); ++k) rank += sv(k) > 1e-10 * sv(0) ? 1 : 0;
      if (rank < static_cast<Eigen::Index>(face.size())) continue;  // covered by a smaller face
      basis = svd.matrixV().rightCols(d - rank);
    }
    if (basis.cols() == 0) continue;
    const Eigen::MatrixXd M = basis.transpose() * B * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const auto& ev = es.eigenvalues();
    const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      bool degenerate = false;
      Eigen::MatrixXd space(basis.cols(), 0);
      for (Eigen::Index l = 0; l < ev.size(); ++l) {
        if (std::abs(ev(l) - ev(k)) <= 1e-10 * scale) {
          space.conservativeResize(Eigen::NoChange, space.cols() + 1);
          space.col(space.cols() - 1) = es.eigenvectors().col(l);
          degenerate = degenerate || l != k;
        }
      }
      consider(basis * es.eigenvectors().col(k), degenerate);
      if (degenerate && cell.representative) {
        Eigen::Map<const Eigen::VectorXd> rep(cell.representative->coords().data(), d);
        consider(basis * (space * (space.transpose() * (basis.transpose() * rep))), true);
      }
    }
  }
  if (cands.empty()) {
    const auto& rep = *cell.representative;
    return {eval(p, rep.coords()), rep, {rep}, false};
  }
  CellMax out{best, cands.front().second.first, {}, false};
  bool first = true;
  for (auto& [v, xd] : cands) {
    if (v < best - kTieTol) continue;
    if (first) out.x_star = xd.first;
    first = false;
    out.continuum = out.continuum || xd.second;
    push_unique(out.ties, xd.first);
  }
  return out;
}

MaxReport grid_max(const PerceptronParams& p) {
  const std::size_t d = p.dim();
  MaxReport r{-std::numeric_limits<double>::infinity(), {}, {}, false, "grid"};
  std::vector<std::pair<double, UnitVector>> peaks;
  if (d == 2) {
    constexpr int n = 1 << 17;
    const double h = kTwoPi / n;
    std::vector<double> f(n);
    for (int k = 0; k < n; ++k) f[static_cast<std::size_t>(k)] = eval(p, UnitVector::from_angle(k * h).coords());
    for (int k = 0; k < n; ++k) {
      const double prev = f[static_cast<std::size_t>((k + n - 1) % n)];
      const double next = f[static_cast<std::size_t>((k + 1) % n)];
      const double cur = f[static_cast<std::size_t>(k)];
      if (cur < prev || cur < next) continue;
      // Golden-section refinement on the bracketing interval.
      double a = (k - 1) * h, b = (k + 1) * h;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double c = b - g * (b - a), e = a + g * (b - a);
      double fc = eval(p, UnitVector::from_angle(c).coords());
      double fe = eval(p, UnitVector::from_angle(e).coords());
      for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
        if (fc >= fe) {
          b = e, e = c, fe = fc, c = b - g * (b - a);
          fc = eval(p, UnitVector::from_angle(c).coords());
        } else {
          a = c, c = e, fc = fe, e = a + g * (b - a);
          fe = eval(p, UnitVector::from_angle(e).coords());
        }
      }
      auto x = UnitVector::from_angle(0.5 * (a + b));
      const double v = std::max(eval(p, x.coords()), cur);
      peaks.emplace_back(v, v == cur ? UnitVector::from_angle(k * h) : x);
    }
  } else if (d == 3) {
    constexpr std::size_t n = 200000;
    std::vector<std::pair<double, std::vector<double>>> pts;
    pts.reserve(n);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < n; ++k) {
      const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / n;
      const double rr = std::sqrt(1.0 - z * z);
      std::vector<double> x = {rr * std::cos(golden * static_cast<double>(k)),
                               rr * std::sin(golden * static_cast<double>(k)), z};
      pts.emplace_back(eval(p, x), std::move(x));
    }
    std::partial_sort(pts.begin(), pts.begin() + 64, pts.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> u(3);
    for (std::size_t k = 0; k < 64; ++k) {
      std::vector<double> x = pts[k].second;
      double fx = pts[k].first;
      double step = 0.1;
      for (int it = 0; it < 2000 && step > 1e-15; ++it) {
        drift_into(p, x, u);
        const double un = norm(u);
        if (un < 1e-14) break;
        std::vector<double> y = x;
        for (std::size_t i = 0; i < 3; ++i) y[i] += step * u[i] / un;
        const double yn = norm(y);
        for (double& c : y) c /= yn;
        const double fy = eval(p, y);
        if (fy > fx) {
          x = std::move(y), fx = fy, step *= 1.5;
        } else {
          step *= 0.5;
        }
      }
      peaks.emplace_back(fx, UnitVector(x));
    }
  } else {
    throw DomainError("global_max: the sampling fallback supports d <= 3 only");
  }
  for (const auto& [v, x] : peaks) r.value = std::max(r.value, v);
  for (const auto& [v, x] : peaks) {
    if (v >= r.value - kTieTol) push_unique(r.maximizers, x);
  }
  std::sort(r.maximizers.begin(), r.maximizers.end(), lex_less);
  return r;
}

}  // namespace

std::vector<Cell> enumerate_cells(const PerceptronParams& params, std::size_t samples, std::uint64_t seed) {
  params.validate();
  if (!relu_cells_apply(params)) throw DomainError("enumerate_cells: ReLU without biases required");
  if (params.dim() == 2) return cells_d2(params);
  return cells_sampled(params, samples, seed);
}

CellMax cell_max(const Cell& cell, const PerceptronParams& params) {
  if (!relu_cells_apply(params)) throw DomainError("cell_max: ReLU without biases required");
  if (cell.sign_pattern.size() != params.neurons.size()) throw DomainError("cell_max: cell does not match params");
  if (params.dim() == 2) return cell_max_d2(cell, params);
  return cell_max_faces(cell, params);
}

double MaxReport::energy(double beta) const {
  if (!(beta > 0.0)) throw DomainError("energy: beta must be positive");
  return std::exp(beta) / (2.0 * beta) + 0.5 * value;
}

nlohmann::json MaxReport::to_json(std::optional<double> beta) const {
  nlohmann::json maxs = nlohmann::json::array();
  for (const auto& x : maximizers) maxs.push_back(std::vector<double>(x.coords().begin(), x.coords().end()));
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : per_cell) {
    nlohmann::json jc = {{"sign_pattern", c.cell.sign_pattern},
                         {"active_set", c.cell.active_set},
                         {"feasibility", c.cell.sampled ? "sampled" : "exact"},
                         {"value", c.value},
                         {"argmax", std::vector<double>(c.argmax.coords().begin(), c.argmax.coords().end())}};
    if (c.cell.representative) {
      jc["representative"] =
          std::vector<double>(c.cell.representative->coords().begin(), c.cell.representative->coords().end());
    }
    cells.push_back(std::move(jc));
  }
  nlohmann::json j = {{"value", value},
                      {"maximizers", maxs},
                      {"per_cell", cells},
                      {"continuum_suspected", continuum_suspected},
                      {"method", method}};
  if (beta) {
    j["beta"] = *beta;
    j["energy"] = energy(*beta);
  }
  return j;
}

MaxReport global_max(const PerceptronParams& params, std::uint64_t seed) {
  params.validate();
  if (!relu_cells_apply(params)) return grid_max(params);
  MaxReport r{-std::numeric_limits<double>::infinity(), {}, {}, false, "cells"};
  std::vector<CellMax> maxes;
  for (auto& cell : enumerate_cells(params, 100000, seed)) {
    auto cm = cell_max(cell, params);
    r.value = std::max(r.value, cm.value);
    r.per_cell.push_back({std::move(cell), cm.value, cm.x_star});
    maxes.push_back(std::move(cm));
  }
  for (const auto& cm : maxes) {
    if (cm.value < r.value - kTieTol) continue;
    r.continuum_suspected = r.continuum_suspected || cm.continuum;
    for (const auto& x : cm.ties) {
      if (eval(params, x.coords()) >= r.value - kTieTol) push_unique(r.maximizers, x);
    }
  }
  std::sort(r.maximizers.begin(), r.maximizers.end(), lex_less);
  return r;
}

double sliced_w1(const Ensemble& a, const Ensemble& b, std::size_t projections, std::uint64_t seed) {
  if (a.dim() != b.dim()) throw DomainError("sliced_w1: dimension mismatch");
  const std::size_t d = a.dim();
  double total = 0.0;
  std::vector<double> dir(d);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < projections; ++k) {
    for (std::size_t i = 0; i < d; ++i) dir[i] = rng::normal(seed, kStreamSlices, k * d + i);
    const double n = norm(dir);
    for (double& c : dir) c /= n;
    pts.clear();
    for (std::size_t i = 0; i < a.size(); ++i) pts.emplace_back(dot(dir, a.position(i)), a.mass(i));
    for (std::size_t i = 0; i < b.size(); ++i) pts.emplace_back(dot(dir, b.position(i)), -b.mass(i));
    std::sort(pts.begin(), pts.end());
    double cdf = 0.0;
    double w = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      cdf += pts[i].second;
      w += std::abs(cdf) * (pts[i + 1].first - pts[i].first);
    }
    total += w;
  }
  return total / static_cast<double>(projections);
}

nlohmann::json SymmetryReport::to_json() const {
  return {{"axis", axis}, {"max_discrepancy", max_discrepancy}, {"discrepancies", discrepancies}, {"pass", pass}};
}

SymmetryReport minimizer_symmetry_check(const Ensemble& ens, const PerceptronParams& params, double tol,
                                        std::uint64_t seed) {
  if (ens.dim() != 3 || params.dim() != 3) throw DomainError("minimizer_symmetry_check requires d = 3");
  std::vector<double> axis;
  for (const auto& n : params.neurons) {
    if (n.omega == 0.0 || norm(n.a) == 0.0) continue;
    if (axis.empty()) {
      axis = n.a;
      const double an = norm(axis);
      for (double& c : axis) c /= an;
      continue;
    }
    const double an = norm(n.a);
    const double cross = std::hypot(axis[1] * n.a[2] - axis[2] * n.a[1], axis[2] * n.a[0] - axis[0] * n.a[2],
                                    axis[0] * n.a[1] - axis[1] * n.a[0]);
    if (cross > 1e-9 * an) {
      throw InapplicableError("minimizer_symmetry_check: active directions are not collinear");
    }
  }
  if (axis.empty()) throw InapplicableError("minimizer_symmetry_check: no active neuron fixes an axis");

  SymmetryReport r{axis, 0.0, {}, true};
  for (std::size_t k = 0; k < 16; ++k) {
    const double t = kTwoPi * rng::uniform(seed, kStreamRotations, k);
    const double c = std::cos(t), s = std::sin(t);
    std::vector<double> coords;
    coords.reserve(ens.size() * 3);
    for (std::size_t i = 0; i < ens.size(); ++i) {
      auto x = ens.position(i);
      const double ux = dot(axis, x);
      const double cr[3] = {axis[1] * x[2] - axis[2] * x[1], axis[2] * x[0] - axis[0] * x[2],
                            axis[0] * x[1] - axis[1] * x[0]};
      std::vector<double> y(3);
      for (std::size_t q = 0; q < 3; ++q) y[q] = x[q] * c + cr[q] * s + axis[q] * ux * (1.0 - c);
      const double yn = norm(y);
      for (double v : y) coords.push_back(v / yn);
    }
    const double w = sliced_w1(ens, ens.with_coords(std::move(coords)), 64, seed);
    r.discrepancies.push_back(w);
    r.max_discrepancy = std::max(r.max_discrepancy, w);
  }
  r.pass = r.max_discrepancy <= tol;
  return r;
}

}  // namespace aml
