#ifndef PSHLAB_COUNTEREXAMPLE_HPP
#define PSHLAB_COUNTEREXAMPLE_HPP

// A domain in C^2 (ball minus a Hartogs-type set) carrying a plurisubharmonic
// function that no decreasing sequence of continuous psh functions can
// approximate near the origin. Everything depends on r = |z'| and z_n, so the
// working grid is (r, Re z_n, Im z_n).

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pshlab/field_grid.hpp"
#include "pshlab/parallel.hpp"

namespace pshlab {

using Complex = std::complex<double>;

struct Atom {
  int m = 0, j = 0;  // x = 1/m + 4^-(m+j) sqrt(2)/2
  double x = 0.0;
  double c = 0.0;       // weight
  double s_upper = 0.0; // outward-rounded sup_m |log|1/m - x||
};

namespace detail {
inline double round_up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }
inline double round_down(double v) { return std::nextafter(v, -std::numeric_limits<double>::infinity()); }
}  // namespace detail

/// Atoms enumerated diagonally over s = m + j (m >= 2, j >= 1), m ascending
/// within each diagonal.
inline std::vector<Atom> build_sequence_x(std::size_t count) {
  if (count < 1) throw Error(ErrorKind::invalid_argument, "atom count must be >= 1");
  std::vector<Atom> out;
  for (int s = 3; out.size() < count; ++s)
    for (int m = 2; m < s && out.size() < count; ++m) {
      Atom a;
      a.m = m;
      a.j = s - m;
      a.x = 1.0 / m + std::ldexp(1.0, -2 * s) * (std::numbers::sqrt2 / 2.0);
      if (!(a.x > 0.0 && a.x < 1.0)) throw Error(ErrorKind::internal, "atom left (0, 1)");
      out.push_back(a);
    }
  return out;
}

/// min over m >= 1 of |1/m - x|: only m = 1 and the m bracketing 1/x matter.
/// With `lower` set, each candidate is shrunk by the rounding of 1/m and of the
/// subtraction, giving a guaranteed lower bound.
inline double distance_to_A(double x, bool lower = false) {
  if (!(x > 0.0)) throw Error(ErrorKind::invalid_argument, "distance_to_A needs x > 0");
  double best = std::numeric_limits<double>::infinity();
  const double mf = std::floor(1.0 / x);
  for (double m : {1.0, mf - 1.0, mf, mf + 1.0, mf + 2.0}) {
    if (m < 1.0) continue;
    const double inv = 1.0 / m;
    double d = std::abs(inv - x);
    if (lower) d = std::max(0.0, detail::round_down(d - (detail::round_up(inv) - inv)));
    best = std::min(best, d);
  }
  return best;
}

class LogPotential {
 public:
  /// Assigns c_k = 2^-(k+1)/(1 + s_k) unless keep_weights is set, in which
  /// case the supplied c are used as they are.
  explicit LogPotential(std::vector<Atom> atoms, bool keep_weights = false) : atoms_(std::move(atoms)) {
    double sum = 0.0;
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      auto& a = atoms_[k];
      const double d = distance_to_A(a.x, true);
      if (d > 0.0) {
        a.s_upper = detail::round_up(detail::round_up(-std::log(d)));
      } else if (keep_weights) {
        a.s_upper = std::numeric_limits<double>::infinity();
      } else {
        throw Error(ErrorKind::numerical, "atom lies within rounding of the closure of A");
      }
      if (!keep_weights) a.c = std::ldexp(1.0, -static_cast<int>(k) - 2) / (1.0 + a.s_upper);  // 2^-(k+1), 1-based k
      if (!(a.c > 0.0)) throw Error(ErrorKind::invalid_argument, "weights must be positive");
      sum = detail::round_up(sum + detail::round_up(a.c * a.s_upper));
    }
    weighted_sum_upper_ = sum;
    tail_bound_ = std::ldexp(1.0, -static_cast<int>(atoms_.size()) - 1);
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  /// Outward-rounded upper bound of sum c_k s_k over the atoms.
  double weighted_sum_upper() const { return weighted_sum_upper_; }
  /// Bound for the terms beyond the truncation: sum_{k > K} 2^-(k+1).
  double tail_bound() const { return tail_bound_; }
  bool certified_half() const { return weighted_sum_upper_ + tail_bound_ <= 0.5; }

  double operator()(Complex z) const {
    double v = 0.0;
    for (const auto& a : atoms_) {
      const double d = std::abs(z - a.x);
      if (d == 0.0) return -std::numeric_limits<double>::infinity();
      v += a.c * std::log(d);
    }
    return v;
  }

  /// lambda at x_k + offset with the k-th term taken from |offset| directly,
  /// so offsets far below the spacing of doubles near x_k stay exact.
  double near_atom(std::size_t k, double log_abs_offset, double angle) const {
    const double dist = std::exp(log_abs_offset);
    const Complex z = atoms_[k].x + std::polar(dist, angle);
    double v = atoms_[k].c * log_abs_offset;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (i != k) v += atoms_[i].c * std::log(std::abs(z - atoms_[i].x));
    return v;
  }

 private:
  std::vector<Atom> atoms_;
  double weighted_sum_upper_ = 0.0;
  double tail_bound_ = 0.0;
};

inline LogPotential build_weights(const std::vector<Atom>& points) { return LogPotential(points); }

// ---------------------------------------------------------------------------

struct Disc {
  double center = 0.0;
  double log_radius = 0.0;
  bool representable = false;   // exp(log_radius) is a normal double
  double certified_bound = 0.0; // c_k log r_k + upper bound of the rest
  std::optional<double> sampled_max;  // max of lambda on 64 boundary points and a centre ray
};

struct DiscFamily {
  std::vector<Disc> discs;

  bool contains(Complex z) const {
    for (const auto& d : discs)
      if (std::log(std::abs(z - d.center)) < d.log_radius) return true;
    return false;
  }
};

/// r_k = min(exp(-(1 + B_rest + margin)/c_k), dist(x_k, A)/2) with
/// B_rest = log 2 * (sum_{j != k} c_j + tail), valid for |z - x_j| <= 2.
inline DiscFamily build_discs(const LogPotential& lam, double margin = 1e-3) {
  DiscFamily fam;
  double total_c = 0.0;
  for (const auto& a : lam.atoms()) total_c += a.c;
  const auto& atoms = lam.atoms();
  fam.discs.resize(atoms.size());
  parallel_for(atoms.size(), [&](std::size_t k) {
    const auto& a = atoms[k];
    const double rest = std::log(2.0) * (total_c - a.c + lam.tail_bound());
    Disc d;
    d.center = a.x;
    d.log_radius = std::min(-(1.0 + rest + margin) / a.c, std::log(distance_to_A(a.x) / 2.0));
    d.certified_bound = a.c * d.log_radius + rest;
    d.representable = d.log_radius > std::log(DBL_MIN);
    if (d.representable) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < 64; ++i) mx = std::max(mx, lam.near_atom(k, d.log_radius, 2.0 * std::numbers::pi * i / 64));
      for (int i = 1; i <= 8; ++i) mx = std::max(mx, lam.near_atom(k, d.log_radius + std::log(i / 8.0), 0.0));
      d.sampled_max = mx;
    }
    fam.discs[k] = d;
  });
  return fam;
}

// ---------------------------------------------------------------------------

/// Omega = {|z'|^2 + |z_n - 1|^2 < 1} minus K = {|z'| = |z_n|, z_n outside the discs}.
class CounterDomain {
 public:
  CounterDomain(LogPotential lam, DiscFamily discs) : lam_(std::move(lam)), discs_(std::move(discs)) {}

  const LogPotential& potential() const { return lam_; }
  const DiscFamily& discs() const { return discs_; }

  static bool in_ball(double r, Complex zn) { return r * r + std::norm(zn - 1.0) < 1.0; }

  /// Within tol of the removed set.
  bool near_K(double r, Complex zn, double tol) const {
    return std::abs(r - std::abs(zn)) <= tol && !discs_.contains(zn);
  }

  bool contains(double r, Complex zn, double tol = 0.0) const {
    if (!in_ball(r, zn)) return false;
    return tol > 0.0 ? !near_K(r, zn, tol) : !(r == std::abs(zn) && !discs_.contains(zn));
  }

  /// max(lambda(z_n), -1) on D = {|z'| < |z_n|}, -1 elsewhere.
  double u(double r, Complex zn) const {
    if (!contains(r, zn)) throw Error(ErrorKind::domain, "point is not in the counterexample domain");
    return r < std::abs(zn) ? std::max(lam_(zn), -1.0) : -1.0;
  }

 private:
  LogPotential lam_;
  DiscFamily discs_;
};

inline CounterDomain build_counter_domain(std::size_t atom_count = 66) {
  auto lam = build_weights(build_sequence_x(atom_count));
  auto discs = build_discs(lam);
  return CounterDomain(std::move(lam), std::move(discs));
}

// ---------------------------------------------------------------------------
// Radial window grid

/// Omega_U = {r <= 2/k, |z_n - 1/k| <= w} minus K on an n^3 grid over
/// (r, Re z_n, Im z_n). Nodes within one r-spacing of K are OUTSIDE.
struct RadialWindow {
  int k = 4;
  double w = 0.08;
  GridSpec grid;
  ScalarField u;
  std::vector<signed char> side;  // +1 in D (r < |z_n|), -1 outside D, 0 not in the window

  double radius() const { return 2.0 / k; }
  Complex zn(std::size_t i) const {
    const Point p = grid.point(i);
    return {p[1], p[2]};
  }
};

inline RadialWindow build_window(const CounterDomain& dom, int k, double w, std::size_t n) {
  if (k < 2) throw Error(ErrorKind::invalid_argument, "window index k must be >= 2");
  if (!(w > 0.0) || !(w < 1.0 / k)) throw Error(ErrorKind::invalid_argument, "window radius must lie in (0, 1/k)");
  if (n < 8) throw Error(ErrorKind::invalid_argument, "window grid needs at least 8 nodes per axis");
  RadialWindow win;
  win.k = k;
  win.w = w;
  const double c = 1.0 / k;
  win.grid = make_grid({0.0, c - w, -w}, {2.0 / k, c + w, w}, n);
  const double tol = win.grid.spacing[0];
  std::vector<double> vals(win.grid.size(), 0.0);
  std::vector<NodeTag> mask(win.grid.size(), NodeTag::outside);
  win.side.assign(win.grid.size(), 0);
  parallel_for(win.grid.size(), [&](std::size_t i) {
    const Point p = win.grid.point(i);
    const Complex zn{p[1], p[2]};
    if (std::abs(zn - c) > w + 1e-12) return;
    if (!CounterDomain::in_ball(p[0], zn)) throw Error(ErrorKind::geometry, "window leaves the ball");
    if (dom.near_K(p[0], zn, tol)) return;
    mask[i] = NodeTag::inside;
    win.side[i] = p[0] < std::abs(zn) ? 1 : -1;
    vals[i] = dom.u(p[0], zn);
  });
  win.u = ScalarField(win.grid, std::move(vals), std::move(mask));
  return win;
}

// ---------------------------------------------------------------------------
// Slices

struct SliceDefect {
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t node = 0;
};

/// Discrete 2D radial Laplacian f'' + f'/r (4 (f_1 - f_0)/h^2 at r = 0);
/// subharmonic means every value is >= -tol.
inline SliceDefect radial_slice_defect(const std::vector<double>& f, double h) {
  if (f.size() < 3) throw Error(ErrorKind::invalid_argument, "slice needs at least 3 nodes");
  SliceDefect d;
  auto put = [&](double lap, std::size_t i) {
    if (-lap > d.worst) {
      d.worst = -lap;
      d.node = i;
    }
  };
  put(4.0 * (f[1] - f[0]) / (h * h), 0);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const double r = i * h;
    put((f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h) + (f[i + 1] - f[i - 1]) / (2.0 * r * h), i);
  }
  return d;
}

struct SliceResult {
  bool holds = false;
  double centre = 0.0;
  double ring = 0.0;
};

/// f on radial nodes r_i = i h of the closed disc |z'| <= R. Checks
/// f(0) <= M + slack after verifying discrete subharmonicity.
inline SliceResult slice_max_principle(const std::vector<double>& f, double h, double M, double slack = 0.0,
                                       double defect_tol = 1e-9) {
  const auto d = radial_slice_defect(f, h);
  if (d.worst > defect_tol)
    throw Error(ErrorKind::numerical, "not subharmonic on slice (defect " + std::to_string(d.worst) + " at radial node " +
                                          std::to_string(d.node) + "); the maximum principle does not apply");
  return {f.front() <= M + slack, f.front(), f.back()};
}

// ---------------------------------------------------------------------------
// Candidates and the falsification chain

struct Candidate {
  std::string name;
  std::vector<ScalarField> fields;  // v_1, v_2, ... on the window grid
  // v_q(r_i, z_n) on the radial nodes of the window for an arbitrary slice z_n
  std::function<std::vector<double>(std::size_t q, Complex zn)> slice;
};

enum class Verdict { contradiction, hypothesis_violated, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::contradiction: return "contradiction";
    case Verdict::hypothesis_violated: return "hypothesis_violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct ChainSwitches {
  bool verify = true, dini = true, max_principle = true, continuity = true, compare = true;
};

struct Witness {
  Verdict verdict = Verdict::inconclusive;
  std::string hypothesis;  // violated requirement, or the step that stopped the chain
  std::string detail;
  std::optional<std::size_t> node;
  std::optional<std::size_t> q;
  // contradiction chain
  int k = 0;
  double window = 0.0;
  std::vector<double> y;               // atoms used as slices
  std::size_t q0 = 0;                  // first index with v_q <= -3/4 on the ring set
  double ring_max = 0.0;               // max of v_q0 on the ring set
  std::vector<double> centre_values;   // v_q0(0, y_p)
  double lipschitz = 0.0;              // grid-scale constant of v_q0
  double chain_bound = 0.0;            // bound for v_q0(0, 1/k)
  double u_value = 0.0;                // u(0, 1/k)
  double u_lower = 0.0;                // certified lower bound -(sum c s + tail)
};

constexpr double kRingThreshold = -0.75;

namespace detail {

inline double grid_lipschitz(const ScalarField& v, const RadialWindow& win) {
  const auto& g = win.grid;
  std::vector<double> local(v.size(), 0.0);
  parallel_for(v.size(), [&](std::size_t i) {
    if (!v.in_domain(i)) return;
    const Index idx = g.unflatten(i);
    double best = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (idx[a] + 1 >= g.shape[a]) continue;
      Index nb = idx;
      ++nb[a];
      const std::size_t jn = g.flatten(nb);
      if (!v.in_domain(jn) || win.side[jn] != win.side[i]) continue;
      best = std::max(best, std::abs(v[jn] - v[i]) / g.spacing[a]);
    }
    local[i] = best;
  });
  double out = 0.0;
  for (double x : local) out = std::max(out, x);
  return out;
}

}  // namespace detail

/// Runs the maximum-principle chain against a candidate decreasing sequence.
/// The atoms (k, j) converging to 1/k serve as the slices y_p.
inline Witness falsify(const CounterDomain& dom, const RadialWindow& win, const Candidate& cand,
                       const ChainSwitches& sw = {}) {
  Witness wit;
  wit.k = win.k;
  wit.window = win.w;
  const double c = 1.0 / win.k;
  const auto& g = win.grid;
  const double hr = g.spacing[0];
  if (cand.fields.empty()) throw Error(ErrorKind::invalid_argument, "candidate has no fields");
  for (const auto& f : cand.fields)
    if (!(f.spec() == g) || f.mask() != win.u.mask()) throw Error(ErrorKind::invalid_argument, "candidate grid differs from the window");

  for (const auto& a : dom.potential().atoms())
    if (a.m == win.k && std::abs(a.x - c) < win.w) wit.y.push_back(a.x);
  std::sort(wit.y.begin(), wit.y.end(), [c](double a, double b) { return std::abs(a - c) > std::abs(b - c); });
  if (wit.y.size() < 3) throw Error(ErrorKind::invalid_argument, "fewer than 3 atoms inside the window: choose larger k or r");

  auto stop = [&](Verdict v, std::string hyp, std::string detail) {
    wit.verdict = v;
    wit.hypothesis = std::move(hyp);
    wit.detail = std::move(detail);
    return wit;
  };

  // (1) hypotheses at grid scale and on the atom slices
  if (!sw.verify) return stop(Verdict::inconclusive, "verify", "hypothesis check disabled");
  const std::size_t Q = cand.fields.size();
  for (std::size_t q = 0; q < Q; ++q) {
    const auto& v = cand.fields[q];
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v.in_domain(i)) continue;
      if (!std::isfinite(v[i])) {
        wit.node = i;
        wit.q = q + 1;
        return stop(Verdict::hypothesis_violated, "continuity", "non-finite value");
      }
      if (v[i] < win.u[i]) {
        wit.node = i;
        wit.q = q + 1;
        return stop(Verdict::hypothesis_violated, "lower bound", "v_q < u at a grid node");
      }
      if (q > 0 && v[i] > cand.fields[q - 1][i]) {
        wit.node = i;
        wit.q = q + 1;
        return stop(Verdict::hypothesis_violated, "monotonicity", "v_q > v_{q-1} at a grid node");
      }
    }
    for (double y : wit.y) {
      const auto f = cand.slice(q, Complex{y, 0.0});
      const auto d = radial_slice_defect(f, hr);
      if (d.worst > 1e-9) {
        wit.node = d.node;
        wit.q = q + 1;
        return stop(Verdict::hypothesis_violated, "slice subharmonicity",
                    "radial defect " + std::to_string(d.worst) + " on the slice z_n = " + std::to_string(y));
      }
      // slices through atoms avoid K, where u = -1
      for (double fv : f)
        if (fv < -1.0) {
          wit.q = q + 1;
          return stop(Verdict::hypothesis_violated, "lower bound", "v_q < u on an atom slice");
        }
    }
  }

  // (2) Dini: first q with v_q <= -3/4 on the ring |z'| = 2/k (grid nodes and atom slices)
  if (!sw.dini) return stop(Verdict::inconclusive, "dini", "ring step disabled");
  const std::size_t last_r = g.shape[0] - 1;
  std::optional<std::size_t> q0;
  for (std::size_t q = 0; q < Q && !q0; ++q) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (cand.fields[q].in_domain(i) && g.unflatten(i)[0] == last_r) mx = std::max(mx, cand.fields[q][i]);
    for (double y : wit.y) mx = std::max(mx, cand.slice(q, Complex{y, 0.0}).back());
    if (mx <= kRingThreshold) {
      q0 = q;
      wit.ring_max = mx;
    }
  }
  if (!q0) return stop(Verdict::inconclusive, "dini", "no q with v_q <= -3/4 on the ring");
  wit.q0 = *q0 + 1;

  // (3) maximum principle on each atom slice
  if (!sw.max_principle) return stop(Verdict::inconclusive, "max principle", "slice step disabled");
  for (double y : wit.y) {
    const auto res = slice_max_principle(cand.slice(*q0, Complex{y, 0.0}), hr, kRingThreshold);
    if (!res.holds) return stop(Verdict::inconclusive, "max principle", "centre value above -3/4");
    wit.centre_values.push_back(res.centre);
  }

  // (4) continuity from the atom slices to (0, 1/k)
  if (!sw.continuity) return stop(Verdict::inconclusive, "continuity", "continuity step disabled");
  wit.lipschitz = detail::grid_lipschitz(cand.fields[*q0], win);
  wit.chain_bound = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < wit.y.size(); ++p)
    wit.chain_bound = std::min(wit.chain_bound, wit.centre_values[p] + wit.lipschitz * std::abs(wit.y[p] - c));

  // (5) compare with u(0, 1/k)
  if (!sw.compare) return stop(Verdict::inconclusive, "compare", "comparison disabled");
  wit.u_value = dom.u(0.0, Complex{c, 0.0});
  wit.u_lower = -(dom.potential().weighted_sum_upper() + dom.potential().tail_bound());
  if (wit.chain_bound < std::max(wit.u_lower, -1.0) && wit.chain_bound < wit.u_value) {
    wit.verdict = Verdict::contradiction;
    wit.hypothesis = "none";
    wit.detail = "v_q0(0, 1/k) <= chain bound < u(0, 1/k) although v_q >= u was verified";
    return wit;
  }
  return stop(Verdict::inconclusive, "compare", "chain bound does not separate from u(0, 1/k)");
}

// ---------------------------------------------------------------------------
// Candidate builders

namespace detail {

/// Mollifies each run of same-side nodes along r with the kernel (1 - t^2/s^2)^3,
/// renormalized over the run (one-sided near the run ends).
inline std::vector<double> mollify_runs(const std::vector<double>& f, const std::vector<signed char>& side, double sigma_nodes) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  const int reach = static_cast<int>(std::ceil(sigma_nodes));
  for (std::size_t i = 0; i < n; ++i) {
    if (side[i] == 0) continue;
    double acc = 0.0, wsum = 0.0;
    for (int d = -reach; d <= reach; ++d) {
      const long jn = static_cast<long>(i) + d;
      if (jn < 0 || jn >= static_cast<long>(n) || side[jn] != side[i]) continue;
      // stop at the first break in the run
      bool contiguous = true;
      for (long t = std::min<long>(i, jn); t < std::max<long>(i, jn); ++t)
        if (side[t] != side[i] || side[t + 1] != side[i]) contiguous = false;
      if (!contiguous) continue;
      const double t = d / sigma_nodes;
      const double w = t * t < 1.0 ? std::pow(1.0 - t * t, 3) : 0.0;
      acc += w * f[jn];
      wsum += w;
    }
    out[i] = acc / wsum;
  }
  return out;
}

}  // namespace detail

/// v_q = (run-wise radial mollification of u) + 1/q for q = 1..count.
inline Candidate naive_mollification_candidate(const CounterDomain& dom, const RadialWindow& win, std::size_t count = 8) {
  const auto& g = win.grid;
  const std::size_t nr = g.shape[0], nx = g.shape[1], ny = g.shape[2];
  Candidate cand;
  cand.name = "naive mollification";
  for (std::size_t q = 1; q <= count; ++q) {
    const double sigma = 3.0 / static_cast<double>(q) + 1.0;
    std::vector<double> vals(g.size(), 0.0);
    parallel_for(nx * ny, [&](std::size_t col) {
      const std::size_t ix = col / ny, iy = col % ny;
      std::vector<double> f(nr);
      std::vector<signed char> side(nr);
      for (std::size_t ir = 0; ir < nr; ++ir) {
        const std::size_t i = g.flatten(Index{ir, ix, iy});
        f[ir] = win.u[i];
        side[ir] = win.side[i];
      }
      const auto m = detail::mollify_runs(f, side, sigma);
      for (std::size_t ir = 0; ir < nr; ++ir) {
        const std::size_t i = g.flatten(Index{ir, ix, iy});
        if (side[ir] != 0) vals[i] = m[ir] + 1.0 / static_cast<double>(q);
      }
    });
    cand.fields.push_back(win.u.with_values(std::move(vals)));
  }
  const double hr = g.spacing[0];
  cand.slice = [&dom, nr, hr](std::size_t q, Complex zn) {
    const double sigma = 3.0 / static_cast<double>(q + 1) + 1.0;
    std::vector<double> f(nr);
    std::vector<signed char> side(nr);
    for (std::size_t ir = 0; ir < nr; ++ir) {
      const double r = ir * hr;
      if (!dom.contains(r, zn)) {
        side[ir] = 0;
        continue;
      }
      f[ir] = dom.u(r, zn);
      side[ir] = r < std::abs(zn) ? 1 : -1;
    }
    // an atom slice is one component: u is -1 on both sides of |z'| = |z_n|
    std::vector<signed char> one(nr, 1);
    for (std::size_t ir = 0; ir < nr; ++ir)
      if (side[ir] == 0) one[ir] = 0;
    auto m = detail::mollify_runs(f, one, sigma);
    for (double& v : m) v += 1.0 / static_cast<double>(q + 1);
    return m;
  };
  return cand;
}

/// v_q = value on every node and slice.
inline Candidate constant_candidate(const RadialWindow& win, double value, std::size_t count = 8) {
  Candidate cand;
  cand.name = "constant";
  for (std::size_t q = 0; q < count; ++q) cand.fields.push_back(win.u.with_values(std::vector<double>(win.u.size(), value)));
  const std::size_t nr = win.grid.shape[0];
  cand.slice = [nr, value](std::size_t, Complex) { return std::vector<double>(nr, value); };
  return cand;
}

}  // namespace pshlab

#endif  // PSHLAB_COUNTEREXAMPLE_HPP
