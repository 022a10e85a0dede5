#ifndef PSHLAB_DOMAINS_HPP
#define PSHLAB_DOMAINS_HPP

// Cap geometry Omega = D cap U over a Lipschitz graph, shift cones, erosion
// sets, the compact core and exhaustion profiles rho = p o d.
//
// Coordinates: a point z in R^m is (a, x) with a = (z_0..z_{m-2}) the graph
// base and x = z_{m-1} the graph direction.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pshlab/field_grid.hpp"

namespace pshlab {

enum class GraphKind { constant, abs, pwl };

inline double base_norm(const Point& z, int rank) {
  double s = 0.0;
  for (int j = 0; j < rank - 1; ++j) s += z[j] * z[j];
  return std::sqrt(s);
}

/// F on the base ball B = {|a| < 1}. constant: F = v; abs: F = v0 + s|a|;
/// pwl: uniform samples over [-1, 1] (base dimension 1 only).
class LipschitzGraph {
 public:
  static LipschitzGraph constant(double C, double value, int base_dim = 1) {
    return LipschitzGraph(C, GraphKind::constant, {value}, base_dim);
  }
  static LipschitzGraph abs(double C, double offset, double slope, int base_dim = 1) {
    return LipschitzGraph(C, GraphKind::abs, {offset, slope}, base_dim);
  }
  static LipschitzGraph pwl(double C, std::vector<double> samples) {
    return LipschitzGraph(C, GraphKind::pwl, std::move(samples), 1);
  }

  double C() const { return C_; }
  GraphKind kind() const { return kind_; }
  int base_dim() const { return base_dim_; }
  const std::vector<double>& params() const { return params_; }
  bool radial() const { return kind_ != GraphKind::pwl; }

  /// F at a base point given by its first base_dim components.
  double operator()(const Point& a) const {
    double r2 = 0.0;
    for (int j = 0; j < base_dim_; ++j) r2 += a[j] * a[j];
    switch (kind_) {
      case GraphKind::constant: return params_[0];
      case GraphKind::abs: return params_[0] + params_[1] * std::sqrt(r2);
      case GraphKind::pwl: return pwl_eval(a[0]);
    }
    return 0.0;
  }

  /// Polyline of the graph profile in the (s, x) half-plane: s = a for base
  /// dimension 1, s = |a| for radial kinds in higher dimension.
  std::vector<std::array<double, 2>> profile() const {
    std::vector<std::array<double, 2>> pts;
    if (kind_ == GraphKind::pwl) {
      const std::size_t n = params_.size();
      for (std::size_t i = 0; i < n; ++i) pts.push_back({-1.0 + 2.0 * i / (n - 1.0), params_[i]});
      return pts;
    }
    auto f = [&](double s) { return kind_ == GraphKind::constant ? params_[0] : params_[0] + params_[1] * std::abs(s); };
    if (base_dim_ == 1) {
      pts = {{-1.0, f(-1.0)}, {0.0, f(0.0)}, {1.0, f(1.0)}};
    } else {
      pts = {{0.0, f(0.0)}, {1.0, f(1.0)}};
    }
    return pts;
  }

  /// Range and Lipschitz invariants checked on a deterministic sample.
  void validate(int samples = 401) const {
    if (!(C_ > 0.0)) throw Error(ErrorKind::invalid_argument, "graph constant C must be positive");
    if (kind_ == GraphKind::pwl && params_.size() < 2)
      throw Error(ErrorKind::invalid_argument, "pwl graph needs at least two samples");
    if (kind_ != GraphKind::pwl && base_dim_ != 1 && base_dim_ != 3)
      throw Error(ErrorKind::invalid_argument, "base dimension must be 1 or 3");
    const double lo = 3.0 * C_, hi = 4.0 * C_;
    const double slack = 1e-12 * C_;
    std::vector<double> s(samples), v(samples);
    for (int i = 0; i < samples; ++i) {
      s[i] = -1.0 + 2.0 * i / (samples - 1.0);
      Point a{};
      a[0] = s[i];
      v[i] = (*this)(a);
      if (v[i] < lo - slack || v[i] > hi + slack)
        throw Error(ErrorKind::invalid_argument, "graph leaves [3C, 4C] at a = " + std::to_string(s[i]));
    }
    for (int i = 0; i < samples; ++i)
      for (int j = i + 1; j < samples; ++j)
        if (std::abs(v[i] - v[j]) > C_ * (s[j] - s[i]) * (1.0 + 1e-9) + slack)
          throw Error(ErrorKind::invalid_argument, "graph violates the Lipschitz bound C");
  }

 private:
  LipschitzGraph(double C, GraphKind kind, std::vector<double> params, int base_dim)
      : C_(C), kind_(kind), params_(std::move(params)), base_dim_(base_dim) {}

  double pwl_eval(double a) const {
    const std::size_t n = params_.size();
    const double s = std::clamp((a + 1.0) * 0.5 * (n - 1.0), 0.0, n - 1.0);
    std::size_t i = static_cast<std::size_t>(std::floor(s));
    if (i + 1 >= n) i = n - 2;
    const double t = s - i;
    return (1.0 - t) * params_[i] + t * params_[i + 1];
  }

  double C_;
  GraphKind kind_;
  std::vector<double> params_;
  int base_dim_;
};

/// Modified graph max{F(a), 5C sqrt(1 - |a|^2)}.
inline double hat_F(const LipschitzGraph& g, const Point& a) {
  double r2 = 0.0;
  for (int j = 0; j < g.base_dim(); ++j) r2 += a[j] * a[j];
  if (r2 > 1.0) throw Error(ErrorKind::domain, "hat_F needs |a| <= 1");
  return std::max(g(a), 5.0 * g.C() * std::sqrt(1.0 - r2));
}

/// Height of the upper boundary of D cap U over a: min{F(a), 5C sqrt(1-|a|^2)}.
inline double cap_upper_boundary(const LipschitzGraph& g, const Point& a) {
  double r2 = 0.0;
  for (int j = 0; j < g.base_dim(); ++j) r2 += a[j] * a[j];
  if (r2 > 1.0) throw Error(ErrorKind::domain, "upper boundary needs |a| <= 1");
  return std::min(g(a), 5.0 * g.C() * std::sqrt(1.0 - r2));
}

// ---------------------------------------------------------------------------
// Distances

namespace detail {

inline double robust_length(double a, double b) { return std::hypot(a, b); }

inline double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    const double gs = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (gs > 0.0) {
      s0 = s;
    } else if (gs < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

/// Distance from (y0, y1), both >= 0, to the ellipse with semi-axes e0 >= e1.
inline double ellipse_distance_sorted(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double sbar = ellipse_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (sbar + r0);
      const double x1 = y1 / (sbar + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

}  // namespace detail

/// Distance from (s, x) to the ellipse s^2/sa^2 + x^2/sx^2 = 1.
inline double ellipse_distance(double sa, double sx, double s, double x) {
  s = std::abs(s);
  x = std::abs(x);
  if (sa >= sx) return detail::ellipse_distance_sorted(sa, sx, s, x);
  return detail::ellipse_distance_sorted(sx, sa, x, s);
}

inline double segment_distance(const std::array<double, 2>& p, const std::array<double, 2>& a,
                               const std::array<double, 2>& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

// ---------------------------------------------------------------------------
// The cap

class CapDomain {
 public:
  CapDomain(LipschitzGraph graph, int rank) : graph_(std::move(graph)), rank_(rank), profile_(graph_.profile()) {
    if (rank_ != 2 && rank_ != 4) throw Error(ErrorKind::invalid_argument, "cap rank must be 2 or 4");
    if (graph_.base_dim() != rank_ - 1) throw Error(ErrorKind::invalid_argument, "graph base dimension must be rank-1");
    if (rank_ == 4 && !graph_.radial()) throw Error(ErrorKind::invalid_argument, "rank-4 caps need a radial graph");
    graph_.validate();
  }

  const LipschitzGraph& graph() const { return graph_; }
  int rank() const { return rank_; }
  double C() const { return graph_.C(); }
  double height() const { return 5.0 * graph_.C(); }  // x semi-axis of U

  bool in_U(const Point& z) const {
    const double s = base_norm(z, rank_);
    const double q = z[rank_ - 1] / height();
    return s * s + q * q < 1.0;
  }

  bool in_D(const Point& z) const { return z[rank_ - 1] < graph_(z); }

  bool contains(const Point& z) const { return in_U(z) && in_D(z); }

  /// Distance to the boundary of U (z inside U).
  double distance_to_U(const Point& z) const {
    return ellipse_distance(1.0, height(), base_norm(z, rank_), z[rank_ - 1]);
  }

  /// Distance to the graph piece {x = F(a), |a| <= 1}.
  double distance_to_graph(const Point& z) const {
    const std::array<double, 2> p{rank_ == 2 ? z[0] : base_norm(z, rank_), z[rank_ - 1]};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < profile_.size(); ++i) best = std::min(best, segment_distance(p, profile_[i], profile_[i + 1]));
    return best;
  }

  /// dist(z, boundary of Omega) = min(dist to complement of D, dist to complement of U).
  double distance_to_boundary(const Point& z) const {
    if (!contains(z)) throw Error(ErrorKind::domain, "distance_to_boundary needs an interior point");
    return std::min(distance_to_graph(z), distance_to_U(z));
  }

  /// Bounding box [-1, 1]^{m-1} x [-5C, max F] sampled with n nodes per axis.
  GridSpec grid(std::size_t n) const {
    double top = 0.0;
    for (const auto& p : profile_) top = std::max(top, p[1]);
    std::vector<double> lo(rank_, -1.0), hi(rank_, 1.0);
    lo[rank_ - 1] = -height();
    hi[rank_ - 1] = top;
    return make_grid(lo, hi, n);
  }

  /// The cap mask as a field of zeros.
  ScalarField mask_field(const GridSpec& g) const {
    return build_field(g, [](const Point&) { return 0.0; }, [this](const Point& z) { return contains(z); });
  }

 private:
  LipschitzGraph graph_;
  int rank_;
  std::vector<std::array<double, 2>> profile_;
};

/// d = -log dist(., boundary of Omega) on the cap nodes.
inline ScalarField log_distance_field(const CapDomain& cap, const GridSpec& g) {
  return build_field(
      g, [&](const Point& z) { return -std::log(cap.distance_to_boundary(z)); },
      [&](const Point& z) { return cap.contains(z); });
}

/// d' = -log dist(., boundary of U) on the cap nodes.
inline ScalarField log_distance_U_field(const CapDomain& cap, const GridSpec& g) {
  return build_field(
      g, [&](const Point& z) { return -std::log(cap.distance_to_U(z)); },
      [&](const Point& z) { return cap.contains(z); });
}

// ---------------------------------------------------------------------------
// Lipschitz estimation

/// Radical-inverse Halton sequence component.
inline double halton(std::uint64_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

struct BallRegion {
  int dim = 1;
  double radius = 1.0;
  bool contains(const Point& a) const {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += a[j] * a[j];
    return s < radius * radius;
  }
};

/// Sup of |fn(a) - fn(b)| / |a - b| over deterministic low-discrepancy pairs in
/// the region: mostly close pairs at log-uniform separations, every fourth
/// pair drawn independently. A lower bound for the true constant.
template <class Fn>
double lipschitz_estimate(const Fn& fn, const BallRegion& region, std::size_t pair_count, std::uint64_t seed = 0) {
  if (!(region.radius > 0.0) || region.dim < 1 || region.dim > 3)
    throw Error(ErrorKind::invalid_argument, "degenerate estimation region");
  if (pair_count < 1000) throw Error(ErrorKind::invalid_argument, "pair_count must be >= 1000");
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  const int d = region.dim;
  auto draw = [&](std::uint64_t idx, int first_prime) {
    Point a{};
    for (int j = 0; j < d; ++j) a[j] = region.radius * (2.0 * halton(idx, primes[first_prime + j]) - 1.0);
    return a;
  };
  double best = 0.0;
  std::uint64_t idx = 1 + seed * 7919;
  std::size_t done = 0;
  while (done < pair_count) {
    ++idx;
    const Point a = draw(idx, 0);
    if (!region.contains(a)) continue;
    Point b{};
    if (done % 4 == 3) {
      b = draw(idx * 2654435761ULL % 1000003 + 17, 3);
      if (!region.contains(b)) continue;
    } else {
      const double t = region.radius * std::pow(10.0, -1.0 - 4.0 * halton(idx, 7));
      Point dir{};
      if (d == 1) {
        dir[0] = halton(idx, 11) < 0.5 ? -1.0 : 1.0;
      } else {
        double n2 = 0.0;
        for (int j = 0; j < d; ++j) {
          dir[j] = 2.0 * halton(idx, primes[3 + j]) - 1.0;
          n2 += dir[j] * dir[j];
        }
        if (n2 < 1e-6) continue;
        for (int j = 0; j < d; ++j) dir[j] /= std::sqrt(n2);
      }
      b = a + t * dir;
      if (!region.contains(b)) b = a - t * dir;
      if (!region.contains(b)) continue;
    }
    double sep = 0.0;
    for (int j = 0; j < d; ++j) sep += (a[j] - b[j]) * (a[j] - b[j]);
    sep = std::sqrt(sep);
    if (sep == 0.0) continue;
    best = std::max(best, std::abs(fn(a) - fn(b)) / sep);
    ++done;
  }
  return best;
}

/// Measured Lipschitz constant of the cap's upper boundary in a thin
/// neighbourhood of {F <= 5C sqrt(1-|a|^2)}; must stay below 7C.
inline double effective_constant(const CapDomain& cap, std::size_t pairs = 20000) {
  const auto& g = cap.graph();
  // Largest |a| where F still lies below the ellipse branch.
  double reach = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double s = i / 4000.0;
    for (double sign : {-1.0, 1.0}) {
      Point a{};
      a[0] = sign * s;
      if (s < 1.0 && g(a) <= 5.0 * g.C() * std::sqrt(1.0 - s * s)) reach = std::max(reach, s);
    }
  }
  const BallRegion region{g.base_dim(), std::min(0.999, reach + 0.005)};
  return lipschitz_estimate([&](const Point& a) { return cap_upper_boundary(g, a); }, region, pairs);
}

// ---------------------------------------------------------------------------
// Cones

/// Open cone {-depth < x < -slope |a|}. The theorem cone K_eps has slope 7C;
/// the continuity-lemma cone also carries the ball radius R.
struct Cone {
  enum class Variant { theorem, lemma };
  Variant variant = Variant::theorem;
  int rank = 2;
  double depth = 0.0;
  double slope = 0.0;
  double radius = 0.0;  // lemma only

  static Cone theorem(double eps, double slope, int rank) { return Cone{Variant::theorem, rank, eps, slope, 0.0}; }
  static Cone lemma(double depth, double slope, double radius, int rank) {
    return Cone{Variant::lemma, rank, depth, slope, radius};
  }

  bool contains(const Point& w) const {
    const double x = w[rank - 1];
    return -depth < x && x < -slope * base_norm(w, rank);
  }

  bool contains_closed(const Point& w, double tol = 1e-12) const {
    const double x = w[rank - 1];
    return -depth - tol <= x && x <= -slope * base_norm(w, rank) + tol;
  }

  bool empty() const { return !(depth > 0.0); }
};

namespace detail {
inline std::vector<Point> base_directions(int base_dim) {
  if (base_dim == 1) return {Point{1.0}, Point{-1.0}};
  std::vector<Point> dirs;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const double n = std::sqrt(double(i * i + j * j + k * k));
        dirs.push_back(Point{i / n, j / n, k / n});
      }
  return dirs;
}
}  // namespace detail

/// Discrete hull of the closed cone: lattice points at the grid spacing, the
/// apex, and the lateral edge and rim at every lattice level and at -depth.
inline std::vector<Point> cone_hull(const Cone& cone, const GridSpec& g) {
  std::vector<Point> pts{Point{}};
  if (cone.empty()) return pts;
  const int m = cone.rank;
  const double hx = g.spacing[m - 1];
  const auto dirs = detail::base_directions(m - 1);
  std::vector<double> levels;
  for (int j = 1; j * hx < cone.depth; ++j) levels.push_back(-j * hx);
  levels.push_back(-cone.depth);
  for (double x : levels) {
    const double reach = cone.slope > 0.0 ? -x / cone.slope : 0.0;
    // Lattice points in the slab.
    std::vector<long> lim(m - 1);
    for (int j = 0; j < m - 1; ++j) lim[j] = cone.slope > 0.0 ? static_cast<long>(std::floor(reach / g.spacing[j])) : 0;
    std::vector<long> c(m - 1, 0);
    for (int j = 0; j < m - 1; ++j) c[j] = -lim[j];
    while (true) {
      Point w{};
      for (int j = 0; j < m - 1; ++j) w[j] = c[j] * g.spacing[j];
      w[m - 1] = x;
      if (cone.contains_closed(w)) pts.push_back(w);
      int j = 0;
      while (j < m - 1 && ++c[j] > lim[j]) {
        c[j] = -lim[j];
        ++j;
      }
      if (j == m - 1) break;
    }
    if (cone.slope > 0.0) {
      for (const auto& d : dirs) {
        Point w = reach * d;
        w[m - 1] = x;
        pts.push_back(w);
      }
    }
  }
  return pts;
}

/// Points strictly inside the open cone used as shift samples: hull points
/// pulled slightly toward the cone axis.
inline std::vector<Point> cone_interior_sample(const Cone& cone, const GridSpec& g) {
  std::vector<Point> out;
  if (cone.empty()) return out;
  const int m = cone.rank;
  for (Point w : cone_hull(cone, g)) {
    if (base_norm(w, m) == 0.0 && w[m - 1] == 0.0) continue;
    for (int j = 0; j < m - 1; ++j) w[j] *= 0.999;
    w[m - 1] = std::max(w[m - 1], -cone.depth * (1.0 - 1e-9));
    if (cone.contains(w)) out.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Erosion

struct ErosionMask {
  int level = 1;
  Cone cone;
  std::vector<bool> member;  // per node
  bool slope_warning = false;

  std::size_t count() const { return static_cast<std::size_t>(std::count(member.begin(), member.end(), true)); }
};

/// Omega_k = {z in Omega: z + k w in Omega for all w in the closed cone},
/// tested on the discrete hull against the continuous membership.
template <class Membership>
ErosionMask erosion_set(const ScalarField& domain, const Membership& contains, const Cone& cone, int k,
                        std::optional<double> expected_slope = std::nullopt) {
  if (k != 1 && k != 2) throw Error(ErrorKind::invalid_argument, "erosion level must be 1 or 2");
  ErosionMask out;
  out.level = k;
  out.cone = cone;
  out.slope_warning = expected_slope && std::abs(*expected_slope - cone.slope) > 1e-12 * std::max(1.0, cone.slope);
  const auto hull = cone_hull(cone, domain.spec());
  const auto& g = domain.spec();
  std::vector<char> member(domain.size(), 0);
  parallel_for(domain.size(), [&](std::size_t i) {
    if (!domain.in_domain(i)) return;
    const Point z = g.point(i);
    for (const auto& w : hull)
      if (!contains(z + static_cast<double>(k) * w)) return;
    member[i] = 1;
  });
  out.member.assign(member.begin(), member.end());
  return out;
}

inline ErosionMask erosion_set(const CapDomain& cap, const ScalarField& domain, const Cone& cone, int k) {
  return erosion_set(domain, [&](const Point& z) { return cap.contains(z); }, cone, k, 7.0 * cap.C());
}

// ---------------------------------------------------------------------------
// Compact core

struct CoreViolation {
  std::size_t node;
  Point shift;
  double dist_here;
  double dist_shifted;
};

struct CoreReport {
  std::vector<bool> core;                  // L_eps as a node set
  std::vector<CoreViolation> violations;   // pairs in Omega_2 \ L_eps failing the re-check
  std::size_t checked_nodes = 0;
  std::size_t checked_pairs = 0;
  std::size_t core_touching_omega1_edge = 0;  // core nodes with a Moore neighbour outside Omega_1

  std::size_t core_size() const { return static_cast<std::size_t>(std::count(core.begin(), core.end(), true)); }
};

/// Smallest node set L_eps in Omega_2 such that dist(z) < dist(z + w) for
/// every z in Omega_2 \ L_eps and every w of the standard shift sample. The
/// complement is then re-checked against a sample at half the grid spacing;
/// any pair failing there means the core is not resolved and is an error.
inline CoreReport compact_core(const CapDomain& cap, const ScalarField& domain, const Cone& cone,
                               const ErosionMask& omega1, const ErosionMask& omega2) {
  const auto& g = domain.spec();
  CoreReport rep;
  rep.core.assign(domain.size(), false);
  if (omega2.count() == 0) throw Error(ErrorKind::geometry, "Omega_2 is empty: the cone exits the domain");
  const auto shifts = cone_interior_sample(cone, g);
  GridSpec fine = g;
  for (auto& h : fine.spacing) h *= 0.5;
  const auto dense = cone_interior_sample(cone, fine);

  auto first_failure = [&](const Point& z, const std::vector<Point>& ws) -> std::optional<CoreViolation> {
    const double here = cap.distance_to_boundary(z);
    for (const auto& w : ws) {
      const Point zw = z + w;
      if (!cap.contains(zw)) continue;
      const double there = cap.distance_to_boundary(zw);
      if (!(here < there)) return CoreViolation{0, w, here, there};
    }
    return std::nullopt;
  };

  std::vector<char> in_core(domain.size(), 0);
  std::vector<std::optional<CoreViolation>> bad(domain.size());
  parallel_for(domain.size(), [&](std::size_t i) {
    if (!omega2.member[i]) return;
    const Point z = g.point(i);
    if (first_failure(z, shifts)) {
      in_core[i] = 1;
    } else if (auto v = first_failure(z, dense)) {
      v->node = i;
      bad[i] = v;
    }
  });
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (!omega2.member[i]) continue;
    ++rep.checked_nodes;
    rep.checked_pairs += in_core[i] ? shifts.size() : shifts.size() + dense.size();
    rep.core[i] = in_core[i] != 0;
    if (bad[i]) rep.violations.push_back(*bad[i]);
    if (in_core[i]) {
      bool touches = false;
      for_each_moore_neighbor(g, i, [&](std::size_t nb) { touches = touches || !omega1.member[nb]; });
      if (touches) ++rep.core_touching_omega1_edge;
    }
  }
  if (!rep.violations.empty()) {
    std::ostringstream msg;
    msg << "no compact core at this resolution: " << rep.violations.size()
        << " nodes outside the core fail the distance comparison (first at node " << rep.violations.front().node << ")";
    throw Error(ErrorKind::geometry, msg.str());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Exhaustion profile

/// Convex nondecreasing piecewise-linear p; linear continuation on both sides.
struct ExhaustionProfile {
  std::vector<double> breakpoints;
  std::vector<double> values;
  std::vector<double> slopes;  // slopes[j] on [t_j, t_{j+1}]; slopes.front() also left of t_0, back() right of t_J

  double operator()(double t) const {
    if (t <= breakpoints.front()) return values.front() + slopes.front() * (t - breakpoints.front());
    if (t >= breakpoints.back()) return values.back() + slopes.back() * (t - breakpoints.back());
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    return values[j] + slopes[j] * (t - breakpoints[j]);
  }

  bool convex() const {
    for (std::size_t j = 1; j < slopes.size(); ++j)
      if (slopes[j] < slopes[j - 1]) return false;
    return !slopes.empty() && slopes.front() >= 0.0;
  }

  /// p(t) = max(t, 0) style helper: explicit breakpoints with given slopes.
  static ExhaustionProfile from_pieces(std::vector<double> bps, std::vector<double> vals, std::vector<double> slopes) {
    ExhaustionProfile p{std::move(bps), std::move(vals), std::move(slopes)};
    return p;
  }
};

struct ProfileOptions {
  std::optional<double> t_start;  // first breakpoint; default min d
  double gain = 0.0;              // extra growth beyond t_start
  double min_slope = 1.0;         // lower bound on every slope, also the interior continuation
  double lift = 0.0;              // constant added to every target
  int breakpoints = 64;
};

/// Convex p with p(t_j) >= sup{phi1 on d <= t_{j+1}} + t_{j+1} + gain (t_{j+1} - t_start) + lift
/// at every breakpoint, hence p(d) - phi1 >= d on every node with d >= t_start.
inline ExhaustionProfile choose_profile(const ScalarField& phi1, const ScalarField& d, const ProfileOptions& opt = {}) {
  if (!(phi1.spec() == d.spec())) throw Error(ErrorKind::invalid_argument, "phi1 and d live on different grids");
  std::vector<std::pair<double, double>> nodes;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.in_domain(i)) continue;
    if (!std::isfinite(d[i])) throw Error(ErrorKind::numerical, "d must be finite on the domain");
    if (!(phi1[i] < std::numeric_limits<double>::max()) || std::isnan(phi1[i]))
      throw Error(ErrorKind::numerical, "phi1 is unbounded on a sublevel set of d");
    nodes.emplace_back(d[i], phi1[i]);
  }
  if (nodes.empty()) throw Error(ErrorKind::invalid_argument, "empty domain");
  std::sort(nodes.begin(), nodes.end());
  const double t_lo = opt.t_start.value_or(nodes.front().first);
  const double t_hi = std::max(nodes.back().first, t_lo + 1e-9);
  const int J = std::max(2, opt.breakpoints);
  std::vector<double> t(J + 1);
  for (int j = 0; j <= J; ++j) t[j] = t_lo + (t_hi - t_lo) * j / J;
  t.push_back(t_hi + (t_hi - t_lo) / J);  // lookahead for the last breakpoint

  // sup of phi1 over {d <= level}
  std::vector<double> sup(t.size(), -std::numeric_limits<double>::infinity());
  {
    std::size_t k = 0;
    double run = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < t.size(); ++j) {
      while (k < nodes.size() && nodes[k].first <= t[j]) run = std::max(run, nodes[k++].second);
      sup[j] = run;
    }
  }
  auto target = [&](std::size_t j) {
    const double s = std::isfinite(sup[j + 1]) ? sup[j + 1] : 0.0;
    return s + t[j + 1] + opt.gain * (t[j + 1] - t_lo) + opt.lift;
  };
  ExhaustionProfile p;
  p.breakpoints.assign(t.begin(), t.begin() + J + 1);
  p.values.resize(J + 1);
  p.slopes.resize(J + 1);
  p.values[0] = target(0);
  double slope = std::max(0.0, opt.min_slope);
  for (int j = 0; j < J; ++j) {
    const double dt = t[j + 1] - t[j];
    slope = std::max(slope, (target(j + 1) - p.values[j]) / dt);
    p.slopes[j] = slope;
    p.values[j + 1] = p.values[j] + slope * dt;
  }
  p.slopes[J] = slope;
  return p;
}

/// Node-wise check of p(d) - phi1 >= d for d >= t_start, plus convexity.
inline bool verify_profile(const ExhaustionProfile& p, const ScalarField& phi1, const ScalarField& d, double t_start) {
  if (!p.convex()) return false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.in_domain(i) || d[i] < t_start) continue;
    if (p(d[i]) - phi1[i] < d[i] - 1e-12 * std::max(1.0, std::abs(d[i]))) return false;
  }
  return true;
}

inline ScalarField compose(const ExhaustionProfile& p, const ScalarField& d) {
  std::vector<double> v(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.in_domain(i)) v[i] = p(d[i]);
  return d.with_values(std::move(v));
}

// ---------------------------------------------------------------------------
// Descriptor files

/// Parses `key = value` lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::config, "not a number: '" + item + "'");
    }
  }
  return out;
}

/// Graph from descriptor keys C, F.kind (const|abs|pwl) and F.params.
inline LipschitzGraph graph_from_descriptor(const std::map<std::string, std::string>& kv, int base_dim = 1) {
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw Error(ErrorKind::config, "missing key " + k);
    return it->second;
  };
  const double C = parse_list(get("C")).at(0);
  const std::string kind = get("F.kind");
  const auto params = parse_list(get("F.params"));
  if (kind == "const") {
    if (params.size() != 1) throw Error(ErrorKind::config, "F.params for const takes one value");
    return LipschitzGraph::constant(C, params[0], base_dim);
  }
  if (kind == "abs") {
    if (params.size() != 2) throw Error(ErrorKind::config, "F.params for abs takes offset, slope");
    return LipschitzGraph::abs(C, params[0], params[1], base_dim);
  }
  if (kind == "pwl") return LipschitzGraph::pwl(C, params);
  throw Error(ErrorKind::config, "unknown F.kind " + kind);
}

}  // namespace pshlab

#endif  // PSHLAB_DOMAINS_HPP
