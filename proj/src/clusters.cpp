#include "aml/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "aml/errors.hpp"

namespace aml {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

UnionFind link(const Ensemble& ens, double threshold, std::size_t* components) {
  const std::size_t n = ens.size();
  UnionFind uf(n);
  std::size_t count = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (geodesic_distance(ens.position(i), ens.position(j)) <= threshold && uf.unite(i, j)) --count;
    }
  }
  if (components) *components = count;
  return uf;
}

double diameter(const Ensemble& ens, const std::vector<std::size_t>& members) {
  double dmax = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      dmax = std::max(dmax, geodesic_distance(ens.position(members[a]), ens.position(members[b])));
    }
  }
  return dmax;
}

// Angles of the members unwrapped so the largest circular gap sits at the end.
std::vector<std::pair<double, double>> unwrapped_arc(const Ensemble& ens,
                                                     const std::vector<std::size_t>& members) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i : members) {
    auto x = ens.position(i);
    pts.emplace_back(std::atan2(x[1], x[0]), ens.mass(i));
  }
  std::sort(pts.begin(), pts.end());
  std::size_t start = 0;
  double gap = pts.front().first + two_pi - pts.back().first;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k].first - pts[k - 1].first > gap) {
      gap = pts[k].first - pts[k - 1].first;
      start = k;
    }
  }
  std::rotate(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(start), pts.end());
  for (std::size_t k = 1; k < pts.size(); ++k) {
    while (pts[k].first < pts[k - 1].first) pts[k].first += two_pi;
  }
  return pts;
}

// Heaviest subset of `members` whose diameter is at most `scale`.
double heaviest_group(const Ensemble& ens, const std::vector<std::size_t>& members, double scale,
                      bool* exact) {
  if (ens.dim() == 2) {
    auto pts = unwrapped_arc(ens, members);
    if (pts.back().first - pts.front().first <= std::numbers::pi) {
      *exact = true;
      double best = 0.0;
      double window = 0.0;
      std::size_t lo = 0;
      for (std::size_t hi = 0; hi < pts.size(); ++hi) {
        window += pts[hi].second;
        while (pts[hi].first - pts[lo].first > scale) window -= pts[lo++].second;
        best = std::max(best, window);
      }
      return best;
    }
  }
  // Balls of radius scale/2 around each member have diameter <= scale.
  *exact = false;
  double best = 0.0;
  for (std::size_t c : members) {
    double m = 0.0;
    for (std::size_t i : members) {
      if (geodesic_distance(ens.position(c), ens.position(i)) <= 0.5 * scale) m += ens.mass(i);
    }
    best = std::max(best, m);
  }
  return best;
}

}  // namespace

double interaction_scale(double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  return 0.5 / std::sqrt(beta);
}

double detection_threshold(double beta, std::size_t dim) {
  return std::min(interaction_scale(beta), std::numbers::pi / (2.0 * static_cast<double>(dim)));
}

double ClusterReport::largest_mass() const {
  double m = 0.0;
  for (const auto& c : clusters) m = std::max(m, c.mass);
  return m;
}

nlohmann::json ClusterReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : clusters) {
    cs.push_back({{"members", c.members}, {"mass", c.mass}, {"diameter", c.diameter}});
  }
  return {{"threshold", threshold}, {"beta", beta}, {"clusters", cs}, {"flags", flags}};
}

ClusterReport ClusterReport::from_json(const nlohmann::json& j) {
  try {
    ClusterReport r;
    r.threshold = j.at("threshold").get<double>();
    r.beta = j.at("beta").get<double>();
    for (const auto& c : j.at("clusters")) {
      r.clusters.push_back({c.at("members").get<std::vector<std::size_t>>(), c.at("mass").get<double>(),
                            c.at("diameter").get<double>()});
    }
    r.flags = j.value("flags", nlohmann::json::object());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("cluster report JSON: ") + e.what());
  }
}

ClusterReport detect(const Ensemble& ens, double beta) {
  return detect_at(ens, beta, detection_threshold(beta, ens.dim()));
}

ClusterReport detect_at(const Ensemble& ens, double beta, double threshold) {
  if (!(beta > 0.0)) throw DomainError("detect: beta must be positive");
  if (!(threshold >= 0.0)) throw DomainError("detect: threshold must be nonnegative");
  auto uf = link(ens, threshold, nullptr);
  ClusterReport r;
  r.threshold = threshold;
  r.beta = beta;
  std::vector<std::size_t> slot(ens.size(), ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const std::size_t root = uf.find(i);
    if (slot[root] == ens.size()) {
      slot[root] = r.clusters.size();
      r.clusters.emplace_back();
    }
    auto& c = r.clusters[slot[root]];
    c.members.push_back(i);
    c.mass += ens.mass(i);
  }
  for (auto& c : r.clusters) c.diameter = diameter(ens, c.members);
  return r;
}

std::size_t count_clusters(const Ensemble& ens, double threshold) {
  std::size_t n = 0;
  link(ens, threshold, &n);
  return n;
}

double mass_bound(double beta, double lambda, double c_theta, double attention_scale) {
  if (!(beta > 0.0)) throw DomainError("mass_bound: beta must be positive");
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("mass_bound: lambda must lie in (0, 1)");
  if (!(c_theta >= 0.0)) throw DomainError("mass_bound: C_theta must be nonnegative");
  if (!(attention_scale > 0.0)) throw DomainError("mass_bound: attention scale must be positive");
  // Numerator and denominator divided by e^beta.
  const double l2 = lambda * lambda;
  const double tail = 2.0 * std::exp(-1.5);
  const double repulsion = 0.5 * std::exp(-0.5 * l2) * (1.0 - l2);
  const double c = c_theta * std::exp(-beta) / attention_scale;
  return std::min(1.0, (tail + c) / (tail + repulsion));
}

double mass_bound_limit(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("mass_bound_limit: lambda must lie in (0, 1)");
  const double l2 = lambda * lambda;
  const double tail = 2.0 * std::exp(-1.5);
  return tail / (tail + 0.5 * std::exp(-0.5 * l2) * (1.0 - l2));
}

double c_theta(const PerceptronParams& params) {
  const double L = lipschitz_constant(params.activation);
  const double s0 = std::abs(activation(params.activation, 0.0).value);
  double c = 0.0;
  for (const auto& n : params.neurons) {
    const double a = norm(n.a);
    c += std::abs(n.omega) * (L * a * a + (s0 + L * (a + std::abs(n.b))) * a);
  }
  return c;
}

double exclusion_constant() { return 0.375 * std::exp(-0.125); }

nlohmann::json BoundDiagnostics::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : clusters) {
    cs.push_back({{"index", c.index},
                  {"mass", c.mass},
                  {"diameter", c.diameter},
                  {"group_mass", c.group_mass},
                  {"group_exact", c.group_exact},
                  {"within_limit", c.within_limit},
                  {"within_finite", c.within_finite}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : atom_counts) {
    rows.push_back({{"eps", r.eps}, {"count", r.count}, {"bound", r.bound}, {"pass", r.pass}});
  }
  return {{"beta", beta},
          {"threshold", threshold},
          {"c_theta", c_theta},
          {"limit", limit},
          {"finite_bound", finite_bound},
          {"clusters", cs},
          {"atom_counts", rows},
          {"arcs", arcs},
          {"arc_length", arc_length},
          {"single_cluster_excluded", single_cluster_excluded},
          {"exclusion_violated", exclusion_violated},
          {"all_pass", all_pass}};
}

BoundDiagnostics verify_bounds(const ClusterReport& report, const Ensemble& ens, double beta,
                               const PerceptronParams* params, const BoundsOptions& opts) {
  const double scale = interaction_scale(beta);
  if (std::abs(report.threshold - scale) > 1e-12 * scale || report.beta != beta) {
    throw ScaleMismatchError("verify_bounds: report must be detected at 1/(2 sqrt(beta))");
  }
  BoundDiagnostics out{};
  out.beta = beta;
  out.threshold = scale;
  out.c_theta = params ? c_theta(*params) : 0.0;
  out.limit = mass_bound_limit(opts.lambda);
  out.finite_bound = mass_bound(beta, opts.lambda, out.c_theta, opts.attention_scale);
  out.all_pass = true;

  double max_diam = 0.0;
  for (std::size_t k = 0; k < report.clusters.size(); ++k) {
    const auto& c = report.clusters[k];
    ClusterCheck chk{k, c.mass, c.diameter, 0.0, true, true, true};
    chk.group_mass = heaviest_group(ens, c.members, scale, &chk.group_exact);
    chk.within_limit = chk.group_mass <= out.limit + opts.tol;
    chk.within_finite = chk.group_mass <= out.finite_bound;
    out.all_pass = out.all_pass && chk.within_limit && chk.within_finite;
    max_diam = std::max(max_diam, c.diameter);
    out.clusters.push_back(chk);
  }

  out.arcs = opts.arcs.value_or(report.clusters.size());
  out.arc_length = opts.arc_length.value_or(max_diam);
  const double atom_tol = opts.atom_tol > 0.0 ? opts.atom_tol : 0.1 * scale;
  const Ensemble atoms = merge_coincident(ens, atom_tol);
  for (double eps : opts.eps_grid) {
    std::size_t count = 0;
    for (double m : atoms.masses()) count += m >= eps ? 1 : 0;
    const double bound = static_cast<double>(out.arcs) * (1.0 + 2.0 * out.arc_length * std::sqrt(beta)) *
                         out.finite_bound / eps;
    const bool pass = static_cast<double>(count) <= bound ||
                      (eps > out.finite_bound && static_cast<double>(count) <= 1.0 / eps);
    out.all_pass = out.all_pass && pass;
    out.atom_counts.push_back({eps, count, bound, pass});
  }

  out.single_cluster_excluded =
      ens.dim() == 2 && out.c_theta / opts.attention_scale < exclusion_constant();
  const bool one_cluster =
      report.clusters.size() == 1 && report.clusters.front().diameter <= scale && ens.size() >= 2;
  out.exclusion_violated = out.single_cluster_excluded && one_cluster;
  out.all_pass = out.all_pass && !out.exclusion_violated;
  return out;
}

}  // namespace aml
