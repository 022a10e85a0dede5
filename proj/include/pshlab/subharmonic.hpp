#ifndef PSHLAB_SUBHARMONIC_HPP
#define PSHLAB_SUBHARMONIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pshlab/domains.hpp"
#include "pshlab/field_grid.hpp"

namespace pshlab {

enum class DefectMode { subharmonic, psh_directional };
enum class StencilKind { grid_ring, circle };

inline const char* to_string(DefectMode m) { return m == DefectMode::subharmonic ? "subharmonic" : "psh_directional"; }
inline const char* to_string(StencilKind k) { return k == StencilKind::grid_ring ? "grid_ring" : "circle"; }

using Offset = std::array<int, kMaxRank>;

// A node-centred discrete mean: one group for the real Laplacian stencil, one
// group per complex direction in the directional mode. The defect at z is the
// max over groups of u(z) - sum_j w_j u(z + o_j).
struct StencilGroup {
  std::vector<Offset> offsets;
  std::vector<double> weights;
};

struct GridStencil {
  DefectMode mode = DefectMode::subharmonic;
  int step = 1;
  std::vector<StencilGroup> groups;
};

/// Complex directions in C^n with z_j = x_{2j} + i x_{2j+1}: the axes, and for
/// n = 2 also e1 +- e2 and e1 +- i e2. Each group holds z +- s v and z +- s iv.
inline std::vector<std::pair<Offset, Offset>> complex_directions(int rank) {
  if (rank != 2 && rank != 4) throw Error(ErrorKind::invalid_argument, "directional stencil needs rank 2 or 4");
  std::vector<std::pair<Offset, Offset>> dirs;  // (v, i v) in real coordinates
  dirs.push_back({Offset{1, 0, 0, 0}, Offset{0, 1, 0, 0}});
  if (rank == 4) {
    dirs.push_back({Offset{0, 0, 1, 0}, Offset{0, 0, 0, 1}});
    dirs.push_back({Offset{1, 0, 1, 0}, Offset{0, 1, 0, 1}});
    dirs.push_back({Offset{1, 0, -1, 0}, Offset{0, 1, 0, -1}});
    dirs.push_back({Offset{1, 0, 0, 1}, Offset{0, 1, -1, 0}});
    dirs.push_back({Offset{1, 0, 0, -1}, Offset{0, 1, 1, 0}});
  }
  return dirs;
}

inline GridStencil make_grid_stencil(const GridSpec& g, DefectMode mode, int step = 1) {
  if (step < 1) throw Error(ErrorKind::invalid_argument, "stencil step must be >= 1");
  GridStencil st;
  st.mode = mode;
  st.step = step;
  const int m = g.rank();
  if (mode == DefectMode::subharmonic) {
    StencilGroup grp;
    double total = 0.0;
    for (int j = 0; j < m; ++j) total += 2.0 / (g.spacing[j] * g.spacing[j]);
    for (int j = 0; j < m; ++j)
      for (int sgn : {-1, 1}) {
        Offset o{};
        o[j] = sgn * step;
        grp.offsets.push_back(o);
        grp.weights.push_back(1.0 / (g.spacing[j] * g.spacing[j]) / total);
      }
    st.groups.push_back(std::move(grp));
    return st;
  }
  const double h0 = g.spacing[0];
  for (int j = 1; j < m; ++j)
    if (std::abs(g.spacing[j] - h0) > 1e-12 * h0)
      throw Error(ErrorKind::invalid_argument, "directional stencil needs isotropic spacing");
  for (const auto& [v, iv] : complex_directions(m)) {
    StencilGroup grp;
    for (const Offset* d : {&v, &iv})
      for (int sgn : {-1, 1}) {
        Offset o{};
        for (int j = 0; j < m; ++j) o[j] = sgn * step * (*d)[j];
        grp.offsets.push_back(o);
        grp.weights.push_back(0.25);
      }
    st.groups.push_back(std::move(grp));
  }
  return st;
}

/// Flat index of node i shifted by o, if it stays on the grid.
inline std::optional<std::size_t> shifted_node(const GridSpec& g, std::size_t i, const Offset& o) {
  Index idx = g.unflatten(i);
  for (int j = 0; j < g.rank(); ++j) {
    const long v = static_cast<long>(idx[j]) + o[j];
    if (v < 0 || v >= static_cast<long>(g.shape[j])) return std::nullopt;
    idx[j] = static_cast<std::size_t>(v);
  }
  return g.flatten(idx);
}

/// Neighbour lists of a stencil at every node; empty when a stencil point is
/// off the grid or OUTSIDE.
struct StencilTable {
  GridStencil stencil;
  std::vector<std::vector<std::size_t>> nodes;  // per node: flattened group-major neighbour list

  bool fits(std::size_t i) const { return !nodes[i].empty(); }
};

inline StencilTable tabulate_stencil(const ScalarField& f, const GridStencil& st) {
  StencilTable t{st, std::vector<std::vector<std::size_t>>(f.size())};
  const auto& g = f.spec();
  parallel_for(f.size(), [&](std::size_t i) {
    if (!f.in_domain(i)) return;
    std::vector<std::size_t> nb;
    for (const auto& grp : st.groups)
      for (const auto& o : grp.offsets) {
        const auto s = shifted_node(g, i, o);
        if (!s || !f.in_domain(*s)) return;
        nb.push_back(*s);
      }
    t.nodes[i] = std::move(nb);
  });
  return t;
}

/// max over groups of u(z) - group mean; -inf at z gives -inf.
inline double stencil_defect(const std::vector<double>& u, std::size_t i, const StencilTable& t) {
  if (u[i] == kNegInf) return kNegInf;
  double worst = kNegInf;
  std::size_t k = 0;
  for (const auto& grp : t.stencil.groups) {
    double mean = 0.0;
    for (double w : grp.weights) mean += w * u[t.nodes[i][k++]];
    worst = std::max(worst, u[i] - mean);
  }
  return worst;
}

// ---------------------------------------------------------------------------

struct DefectReport {
  DefectMode mode = DefectMode::subharmonic;
  StencilKind kind = StencilKind::grid_ring;
  std::optional<std::size_t> worst_node;
  double worst = kNegInf;
  std::size_t above_tolerance = 0;
  std::size_t tested = 0;
  double tolerance = 0.0;

  bool passed() const { return worst <= tolerance; }
};

struct DefectOptions {
  DefectMode mode = DefectMode::subharmonic;
  StencilKind kind = StencilKind::grid_ring;
  double radius = 0.0;  // grid_ring: rounded to a whole number of steps; 0 means one step
  double tolerance = 0.0;
  int circle_resolution = 48;
  const std::vector<bool>* restrict_to = nullptr;  // optional node subset
};

namespace detail {

inline std::vector<std::vector<Point>> circle_groups(int rank, DefectMode mode, double r, int res) {
  std::vector<std::vector<Point>> groups;
  if (mode == DefectMode::subharmonic) {
    const auto s = make_sphere_sample(rank, Point{}, r, rank == 2 ? res : std::max(4, res / 4));
    groups.push_back(s.nodes);
    return groups;
  }
  for (const auto& [v, iv] : complex_directions(rank)) {
    double n = 0.0;
    for (int j = 0; j < rank; ++j) n += v[j] * v[j];
    n = std::sqrt(n);
    std::vector<Point> pts;
    for (int k = 0; k < res; ++k) {
      const double th = 2.0 * std::numbers::pi * k / res;
      Point p{};
      for (int j = 0; j < rank; ++j) p[j] = r * (std::cos(th) * v[j] + std::sin(th) * iv[j]) / n;
      pts.push_back(p);
    }
    groups.push_back(std::move(pts));
  }
  return groups;
}

inline DefectReport finish_report(const std::vector<double>& defect, const std::vector<char>& tested,
                                  const DefectOptions& opt) {
  DefectReport rep;
  rep.mode = opt.mode;
  rep.kind = opt.kind;
  rep.tolerance = opt.tolerance;
  for (std::size_t i = 0; i < defect.size(); ++i) {
    if (!tested[i]) continue;
    ++rep.tested;
    if (defect[i] > opt.tolerance) ++rep.above_tolerance;
    if (!rep.worst_node || defect[i] > rep.worst) {
      rep.worst = defect[i];
      rep.worst_node = i;
    }
  }
  if (rep.tested == 0) throw Error(ErrorKind::domain, "no testable nodes: the stencil exits the domain everywhere");
  return rep;
}

}  // namespace detail

/// Node-wise defects (NaN where untestable) for the chosen stencil.
inline std::vector<double> defect_values(const ScalarField& u, const DefectOptions& opt, std::vector<char>& tested) {
  const auto& g = u.spec();
  std::vector<double> defect(u.size(), std::numeric_limits<double>::quiet_NaN());
  tested.assign(u.size(), 0);
  if (opt.kind == StencilKind::grid_ring) {
    const int step = opt.radius > 0.0 ? std::max(1, static_cast<int>(std::lround(opt.radius / g.min_spacing()))) : 1;
    const auto table = tabulate_stencil(u, make_grid_stencil(g, opt.mode, step));
    parallel_for(u.size(), [&](std::size_t i) {
      if (!table.fits(i) || (opt.restrict_to && !(*opt.restrict_to)[i])) return;
      defect[i] = stencil_defect(u.values(), i, table);
      tested[i] = 1;
    });
    return defect;
  }
  if (opt.radius < 2.0 * g.max_spacing() * (1.0 - 1e-12))
    throw Error(ErrorKind::invalid_argument, "circle stencil radius must be at least two grid spacings");
  const auto groups = detail::circle_groups(g.rank(), opt.mode, opt.radius, opt.circle_resolution);
  parallel_for(u.size(), [&](std::size_t i) {
    if (!u.in_domain(i) || (opt.restrict_to && !(*opt.restrict_to)[i])) return;
    const Point z = g.point(i);
    double worst = kNegInf;
    for (const auto& grp : groups) {
      double mean = 0.0;
      for (const auto& off : grp) {
        const auto v = u.interpolate(z + off);
        if (!v) return;
        mean += *v;
      }
      mean /= static_cast<double>(grp.size());
      worst = std::max(worst, u[i] == kNegInf ? kNegInf : u[i] - mean);
    }
    defect[i] = worst;
    tested[i] = 1;
  });
  return defect;
}

/// Largest positive sub-mean defect; nonpositive certifies a discrete subsolution.
inline DefectReport submean_defect(const ScalarField& u, const DefectOptions& opt = {}) {
  std::vector<char> tested;
  const auto defect = defect_values(u, opt, tested);
  return detail::finish_report(defect, tested, opt);
}

// ---------------------------------------------------------------------------
// Mollification

/// Convolution with the normalized lattice kernel (1 - (t/sigma)^2)^3 on the
/// nodes whose whole kernel support lies in the domain.
inline ScalarField mollify_interior(const ScalarField& u, double sigma) {
  const auto& g = u.spec();
  const int m = g.rank();
  if (sigma < 2.0 * g.max_spacing() * (1.0 - 1e-12))
    throw Error(ErrorKind::invalid_argument, "mollifier radius must be at least two grid spacings");
  std::vector<Offset> offs;
  std::vector<double> wts;
  std::array<int, kMaxRank> lim{};
  for (int j = 0; j < m; ++j) lim[j] = static_cast<int>(std::floor(sigma / g.spacing[j]));
  Offset o{};
  for (int j = 0; j < m; ++j) o[j] = -lim[j];
  while (true) {
    double t2 = 0.0;
    for (int j = 0; j < m; ++j) t2 += std::pow(o[j] * g.spacing[j], 2);
    const double q = 1.0 - t2 / (sigma * sigma);
    if (q > 0.0) {
      offs.push_back(o);
      wts.push_back(q * q * q);
    }
    int j = 0;
    while (j < m && ++o[j] > lim[j]) {
      o[j] = -lim[j];
      ++j;
    }
    if (j == m) break;
  }
  const double wsum = std::accumulate(wts.begin(), wts.end(), 0.0);
  for (double& w : wts) w /= wsum;

  std::vector<double> out(u.size(), 0.0);
  std::vector<char> keep(u.size(), 0);
  parallel_for(u.size(), [&](std::size_t i) {
    if (!u.in_domain(i)) return;
    double acc = 0.0;
    bool neg_inf = false;
    for (std::size_t k = 0; k < offs.size(); ++k) {
      const auto s = shifted_node(g, i, offs[k]);
      if (!s || !u.in_domain(*s)) return;
      if (u[*s] == kNegInf) {
        neg_inf = true;
      } else {
        acc += wts[k] * u[*s];
      }
    }
    out[i] = neg_inf ? kNegInf : acc;
    keep[i] = 1;
  });
  std::vector<NodeTag> mask(u.size(), NodeTag::outside);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (keep[i]) {
      mask[i] = NodeTag::inside;
      ++kept;
    }
  if (kept == 0) throw Error(ErrorKind::domain, "mollifier support leaves the domain at every node");
  assign_band(g, mask);
  return ScalarField(g, std::move(out), std::move(mask));
}

// ---------------------------------------------------------------------------
// Sup-convolution

namespace detail {

// For one (target row, source row) pair: best[c'] = max(best[c'], max_c v_c - k sqrt(d2 + ((c - c') h)^2)).
// The kernel is concave in c - c', so the leftmost argmax is nondecreasing in
// c' and a divide-and-conquer sweep finds every row maximum exactly.
struct RowSource {
  std::vector<std::size_t> col;
  std::vector<double> val;
};

inline void row_pair_max(const RowSource& src, double d2, double k, double h, std::vector<double>& best) {
  const long n_src = static_cast<long>(src.col.size());
  if (n_src == 0) return;
  auto value = [&](long c_target, long j) {
    const double dc = (static_cast<double>(src.col[j]) - static_cast<double>(c_target)) * h;
    return src.val[j] - k * std::sqrt(d2 + dc * dc);
  };
  struct Task {
    long lo, hi, jlo, jhi;
  };
  std::vector<Task> stack{{0, static_cast<long>(best.size()) - 1, 0, n_src - 1}};
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    if (t.lo > t.hi) continue;
    const long mid = (t.lo + t.hi) / 2;
    long arg = t.jlo;
    double top = value(mid, t.jlo);
    for (long j = t.jlo + 1; j <= t.jhi; ++j) {
      const double v = value(mid, j);
      if (v > top) {
        top = v;
        arg = j;
      }
    }
    if (top > best[mid]) best[mid] = top;
    stack.push_back({t.lo, mid - 1, t.jlo, arg});
    stack.push_back({mid + 1, t.hi, arg, t.jhi});
  }
}

}  // namespace detail

/// phi_k(z) = max_w [max(u(w), -k) - k |z - w|] + 1/k over domain nodes w,
/// evaluated at every domain node. Work is organised by rows along the last
/// axis; source rows are visited in order of distance and skipped once no
/// target in the row can improve.
inline ScalarField sup_convolution(const ScalarField& u, double k) {
  if (!(k > 0.0)) throw Error(ErrorKind::invalid_argument, "sup-convolution index must be positive");
  const auto& g = u.spec();
  const int m = g.rank();
  const std::size_t n_last = g.shape[m - 1];
  const std::size_t rows = u.size() / n_last;
  const double h_last = g.spacing[m - 1];

  std::vector<detail::RowSource> src(rows);
  std::vector<double> row_max(rows, kNegInf);
  bool any = false;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n_last; ++c) {
      const std::size_t i = r * n_last + c;
      if (!u.in_domain(i)) continue;
      if (std::isnan(u[i]) || u[i] == std::numeric_limits<double>::infinity())
        throw Error(ErrorKind::numerical, "sup-convolution input must be bounded above");
      const double v = std::max(u[i], -k);
      src[r].col.push_back(c);
      src[r].val.push_back(v);
      row_max[r] = std::max(row_max[r], v);
      any = true;
    }
  if (!any) throw Error(ErrorKind::domain, "sup-convolution of an empty mask");

  auto row_index = [&](std::size_t r, int j) {
    std::size_t rem = r;
    for (int q = m - 2; q > j; --q) rem /= g.shape[q];
    return rem % g.shape[j];
  };

  std::vector<double> out(u.size(), 0.0);
  parallel_for(rows, [&](std::size_t ti) {
    bool needed = false;
    for (std::size_t c = 0; c < n_last; ++c) needed = needed || u.in_domain(ti * n_last + c);
    if (!needed) return;
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      if (src[r].col.empty()) continue;
      double d2 = 0.0;
      for (int j = 0; j < m - 1; ++j) {
        const double dd = (static_cast<double>(row_index(r, j)) - static_cast<double>(row_index(ti, j))) * g.spacing[j];
        d2 += dd * dd;
      }
      order.emplace_back(d2, r);
    }
    std::sort(order.begin(), order.end());
    std::vector<double> best(n_last, kNegInf);
    double floor = kNegInf;  // min of best over the row's domain nodes
    for (const auto& [d2, r] : order) {
      if (row_max[r] - k * std::sqrt(d2) <= floor) continue;
      detail::row_pair_max(src[r], d2, k, h_last, best);
      floor = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_last; ++c)
        if (u.in_domain(ti * n_last + c)) floor = std::min(floor, best[c]);
    }
    for (std::size_t c = 0; c < n_last; ++c)
      if (u.in_domain(ti * n_last + c)) out[ti * n_last + c] = best[c] + 1.0 / k;
  });
  return u.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Moduli of continuity

class ModulusOfContinuity {
 public:
  ModulusOfContinuity() = default;
  ModulusOfContinuity(std::vector<double> t, std::vector<double> v) : t_(std::move(t)), v_(std::move(v)) {
    if (t_.empty() || t_.size() != v_.size()) throw Error(ErrorKind::invalid_argument, "modulus needs matching breakpoints");
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!(t_[i] > 0.0) || (i > 0 && !(t_[i] > t_[i - 1])))
        throw Error(ErrorKind::invalid_argument, "modulus breakpoints must be positive and increasing");
      if (!(v_[i] >= 0.0) || (i > 0 && v_[i] < v_[i - 1]))
        throw Error(ErrorKind::invalid_argument, "modulus values must be nonnegative and nondecreasing");
    }
  }

  /// Linear identity modulus delta(t) = s t sampled up to t_max.
  static ModulusOfContinuity linear(double slope, double t_max, int n = 64) {
    std::vector<double> t(n), v(n);
    for (int i = 0; i < n; ++i) {
      t[i] = t_max * (i + 1) / n;
      v[i] = slope * t[i];
    }
    return {t, v};
  }

  /// Piecewise-linear through (0, v_0 at t_0 ...). Below t_0 the first value,
  /// beyond t_max the last one.
  double operator()(double t) const {
    if (t <= t_.front()) return v_.front();
    if (t >= t_.back()) return v_.back();
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - t_.begin());
    const double s = (t - t_[j - 1]) / (t_[j] - t_[j - 1]);
    return v_[j - 1] + s * (v_[j] - v_[j - 1]);
  }

  const std::vector<double>& breakpoints() const { return t_; }
  const std::vector<double>& values() const { return v_; }
  bool vanishes_at_zero(double tol) const { return v_.front() <= tol; }

 private:
  std::vector<double> t_, v_;
};

namespace detail {
/// Lattice offsets with 0 < |o| <= radius, grouped by distance.
inline std::vector<std::pair<double, Offset>> lattice_ball(const GridSpec& g, double radius) {
  const int m = g.rank();
  std::vector<std::pair<double, Offset>> out;
  std::array<int, kMaxRank> lim{};
  for (int j = 0; j < m; ++j) lim[j] = static_cast<int>(std::floor(radius / g.spacing[j] + 1e-9));
  Offset o{};
  for (int j = 0; j < m; ++j) o[j] = -lim[j];
  while (true) {
    double d2 = 0.0;
    for (int j = 0; j < m; ++j) d2 += std::pow(o[j] * g.spacing[j], 2);
    if (d2 > 0.0 && d2 <= radius * radius * (1.0 + 1e-12)) out.emplace_back(std::sqrt(d2), o);
    int j = 0;
    while (j < m && ++o[j] > lim[j]) {
      o[j] = -lim[j];
      ++j;
    }
    if (j == m) break;
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

inline ModulusOfContinuity from_binned(const std::vector<std::pair<double, Offset>>& offs, const std::vector<double>& per) {
  std::vector<double> t, v;
  double run = 0.0;
  for (std::size_t k = 0; k < offs.size(); ++k) {
    run = std::max(run, per[k]);
    if (!t.empty() && offs[k].first <= t.back() * (1.0 + 1e-12)) {
      v.back() = run;
    } else {
      t.push_back(offs[k].first);
      v.push_back(run);
    }
  }
  return {t, v};
}
}  // namespace detail

/// omega(t) = max |u(a) - u(b)| over node pairs of the set with |a - b| <= t
/// (lattice separations up to t_max).
inline ModulusOfContinuity empirical_modulus(const ScalarField& u, const std::vector<bool>& set, double t_max) {
  const auto& g = u.spec();
  const auto offs = detail::lattice_ball(g, t_max);
  if (offs.empty()) throw Error(ErrorKind::invalid_argument, "modulus range below the grid spacing");
  std::vector<double> per(offs.size(), 0.0);
  std::vector<std::vector<double>> local(u.size());
  parallel_for(u.size(), [&](std::size_t i) {
    if (!set[i]) return;
    std::vector<double> mine(offs.size(), 0.0);
    for (std::size_t k = 0; k < offs.size(); ++k) {
      const auto s = shifted_node(g, i, offs[k].second);
      if (!s || !set[*s]) continue;
      const double d = std::abs(u[i] - u[*s]);
      if (!std::isfinite(d)) throw Error(ErrorKind::numerical, "modulus of an unbounded field");
      mine[k] = d;
    }
    local[i] = std::move(mine);
  });
  for (const auto& mine : local)
    for (std::size_t k = 0; k < mine.size(); ++k) per[k] = std::max(per[k], mine[k]);
  return detail::from_binned(offs, per);
}

// ---------------------------------------------------------------------------
// Cone shifts

struct ConeShiftReport {
  DefectReport defect;
  std::optional<std::pair<std::size_t, Point>> witness;  // base node and shift of the worst pair
};

/// Lattice shifts of the open cone (grid-aligned, so x + y stays on nodes).
inline std::vector<std::pair<double, Offset>> cone_lattice(const Cone& cone, const GridSpec& g) {
  const double reach = std::hypot(cone.depth, cone.slope > 0.0 ? cone.depth / cone.slope : 0.0);
  std::vector<std::pair<double, Offset>> out;
  for (const auto& [d, o] : detail::lattice_ball(g, reach)) {
    Point w{};
    for (int j = 0; j < g.rank(); ++j) w[j] = o[j] * g.spacing[j];
    if (cone.contains(w)) out.emplace_back(d, o);
  }
  return out;
}

/// max over base nodes x and lattice y in the cone of u(x+y) - u(x) - delta(|y|).
inline ConeShiftReport cone_shift_check(const ScalarField& u, const Cone& cone, const ModulusOfContinuity& delta,
                                        const std::vector<bool>& base, double tolerance = 0.0) {
  const auto& g = u.spec();
  const auto shifts = cone_lattice(cone, g);
  if (shifts.empty()) throw Error(ErrorKind::invalid_argument, "cone holds no lattice shift at this resolution");
  std::vector<double> defect(u.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<char> tested(u.size(), 0);
  std::vector<std::size_t> worst_shift(u.size(), 0);
  parallel_for(u.size(), [&](std::size_t i) {
    if (!base[i]) return;
    double worst = kNegInf;
    for (std::size_t k = 0; k < shifts.size(); ++k) {
      const auto s = shifted_node(g, i, shifts[k].second);
      if (!s || !u.in_domain(*s)) {
        Point w{};
        for (int j = 0; j < g.rank(); ++j) w[j] = shifts[k].second[j] * g.spacing[j];
        throw Error(ErrorKind::domain, "base + cone leaves the domain at node " + std::to_string(i) + " with shift (" +
                                           std::to_string(w[0]) + ", " + std::to_string(w[g.rank() - 1]) + ")");
      }
      double d;
      if (u[*s] == kNegInf) {
        d = kNegInf;
      } else if (u[i] == kNegInf) {
        d = std::numeric_limits<double>::infinity();
      } else {
        d = u[*s] - u[i] - delta(shifts[k].first);
      }
      if (d > worst) {
        worst = d;
        worst_shift[i] = k;
      }
    }
    defect[i] = worst;
    tested[i] = 1;
  });
  DefectOptions opt;
  opt.tolerance = tolerance;
  ConeShiftReport rep{detail::finish_report(defect, tested, opt), std::nullopt};
  if (rep.defect.worst_node) {
    Point w{};
    const auto& o = shifts[worst_shift[*rep.defect.worst_node]].second;
    for (int j = 0; j < g.rank(); ++j) w[j] = o[j] * g.spacing[j];
    rep.witness = std::make_pair(*rep.defect.worst_node, w);
  }
  return rep;
}

/// Smallest lattice modulus making the cone-shift hypothesis hold on base:
/// delta(t) = max{(u(x+y) - u(x))^+ : x in base, y in cone, |y| <= t}.
inline ModulusOfContinuity cone_shift_modulus(const ScalarField& u, const Cone& cone, const std::vector<bool>& base) {
  const auto& g = u.spec();
  const auto shifts = cone_lattice(cone, g);
  if (shifts.empty()) throw Error(ErrorKind::invalid_argument, "cone holds no lattice shift at this resolution");
  std::vector<std::vector<double>> local(u.size());
  parallel_for(u.size(), [&](std::size_t i) {
    if (!base[i]) return;
    std::vector<double> mine(shifts.size(), 0.0);
    for (std::size_t k = 0; k < shifts.size(); ++k) {
      const auto s = shifted_node(g, i, shifts[k].second);
      if (!s || !u.in_domain(*s)) throw Error(ErrorKind::domain, "base + cone leaves the domain");
      if (u[*s] == kNegInf) continue;
      const double d = u[*s] - u[i];
      if (std::isnan(d) || d == std::numeric_limits<double>::infinity())
        throw Error(ErrorKind::numerical, "cone-shift modulus is unbounded");
      mine[k] = std::max(0.0, d);
    }
    local[i] = std::move(mine);
  });
  std::vector<double> per(shifts.size(), 0.0);
  for (const auto& mine : local)
    for (std::size_t k = 0; k < mine.size(); ++k) per[k] = std::max(per[k], mine[k]);
  return detail::from_binned(shifts, per);
}

}  // namespace pshlab

#endif  // PSHLAB_SUBHARMONIC_HPP
