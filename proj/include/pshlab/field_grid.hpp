#ifndef PSHLAB_FIELD_GRID_HPP
#define PSHLAB_FIELD_GRID_HPP

// Scalar fields on uniform rectilinear grids over R^m (m = 2..4), sphere
// quadrature with cone-sector tagging, and the PSHF1 file format.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pshlab/error.hpp"
#include "pshlab/parallel.hpp"

namespace pshlab {

inline constexpr int kMaxRank = 4;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Point in R^m; components past the rank are zero.
using Point = std::array<double, kMaxRank>;
using Index = std::array<std::size_t, kMaxRank>;

inline double norm(const Point& p, int rank) {
  double s = 0.0;
  for (int j = 0; j < rank; ++j) s += p[j] * p[j];
  return std::sqrt(s);
}

inline double distance(const Point& a, const Point& b, int rank) {
  double s = 0.0;
  for (int j = 0; j < rank; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(s);
}

inline Point operator+(Point a, const Point& b) {
  for (int j = 0; j < kMaxRank; ++j) a[j] += b[j];
  return a;
}

inline Point operator-(Point a, const Point& b) {
  for (int j = 0; j < kMaxRank; ++j) a[j] -= b[j];
  return a;
}

inline Point operator*(double s, Point a) {
  for (auto& v : a) v *= s;
  return a;
}

enum class NodeTag : std::uint8_t { outside = 0, inside = 1, band = 2 };

inline bool in_domain(NodeTag t) { return t != NodeTag::outside; }

struct GridSpec {
  std::vector<std::size_t> shape;
  std::vector<double> origin;
  std::vector<double> spacing;

  int rank() const { return static_cast<int>(shape.size()); }

  std::size_t size() const {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }

  void validate() const {
    if (shape.size() < 2 || shape.size() > kMaxRank)
      throw Error(ErrorKind::invalid_argument, "grid rank must be 2..4");
    if (origin.size() != shape.size() || spacing.size() != shape.size())
      throw Error(ErrorKind::invalid_argument, "grid origin/spacing rank mismatch");
    for (std::size_t j = 0; j < shape.size(); ++j) {
      if (shape[j] < 3) throw Error(ErrorKind::invalid_argument, "grid shape must be >= 3 on every axis");
      if (!(spacing[j] > 0.0) || !std::isfinite(spacing[j]))
        throw Error(ErrorKind::invalid_argument, "grid spacing must be positive");
      if (!std::isfinite(origin[j])) throw Error(ErrorKind::invalid_argument, "grid origin must be finite");
    }
  }

  double coord(int axis, std::size_t i) const { return origin[axis] + static_cast<double>(i) * spacing[axis]; }

  // Row-major: the last axis varies fastest.
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int j = rank() - 1; j > axis; --j) s *= shape[j];
    return s;
  }

  Index unflatten(std::size_t flat) const {
    Index idx{};
    for (int j = rank() - 1; j >= 0; --j) {
      idx[j] = flat % shape[j];
      flat /= shape[j];
    }
    return idx;
  }

  std::size_t flatten(const Index& idx) const {
    std::size_t flat = 0;
    for (int j = 0; j < rank(); ++j) flat = flat * shape[j] + idx[j];
    return flat;
  }

  Point point(std::size_t flat) const {
    const Index idx = unflatten(flat);
    Point p{};
    for (int j = 0; j < rank(); ++j) p[j] = coord(j, idx[j]);
    return p;
  }

  double max_spacing() const {
    double h = 0.0;
    for (double s : spacing) h = std::max(h, s);
    return h;
  }

  double min_spacing() const {
    double h = spacing.front();
    for (double s : spacing) h = std::min(h, s);
    return h;
  }

  bool operator==(const GridSpec&) const = default;
};

/// Uniform grid of `n` nodes per axis spanning [lo[j], hi[j]].
inline GridSpec make_grid(const std::vector<double>& lo, const std::vector<double>& hi, std::size_t n) {
  GridSpec g;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    g.shape.push_back(n);
    g.origin.push_back(lo[j]);
    g.spacing.push_back((hi[j] - lo[j]) / static_cast<double>(n - 1));
  }
  g.validate();
  return g;
}

/// Calls fn(neighbor_flat) for every node of the 3^m - 1 Moore neighbourhood
/// that lies on the grid.
template <class Fn>
void for_each_moore_neighbor(const GridSpec& g, std::size_t flat, Fn&& fn) {
  const Index idx = g.unflatten(flat);
  const int m = g.rank();
  int total = 1;
  for (int j = 0; j < m; ++j) total *= 3;
  for (int code = 0; code < total; ++code) {
    int c = code;
    bool center = true;
    bool on_grid = true;
    Index nb = idx;
    for (int j = 0; j < m; ++j) {
      const int off = c % 3 - 1;
      c /= 3;
      if (off != 0) center = false;
      if (off < 0 && idx[j] == 0) on_grid = false;
      if (off > 0 && idx[j] + 1 >= g.shape[j]) on_grid = false;
      nb[j] = idx[j] + static_cast<std::size_t>(off);  // wraps harmlessly when off-grid
    }
    if (!center && on_grid) fn(g.flatten(nb));
  }
}

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(GridSpec spec, std::vector<double> values, std::vector<NodeTag> mask)
      : spec_(std::move(spec)), values_(std::move(values)), mask_(std::move(mask)) {
    spec_.validate();
    if (values_.size() != spec_.size() || mask_.size() != spec_.size())
      throw Error(ErrorKind::invalid_argument, "field payload size does not match grid");
  }

  const GridSpec& spec() const { return spec_; }
  int rank() const { return spec_.rank(); }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  NodeTag tag(std::size_t i) const { return mask_[i]; }
  bool in_domain(std::size_t i) const { return mask_[i] != NodeTag::outside; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<NodeTag>& mask() const { return mask_; }

  /// Same grid and mask, new values.
  ScalarField with_values(std::vector<double> values) const { return ScalarField(spec_, std::move(values), mask_); }

  /// Multilinear interpolation. Empty when a corner with positive weight is
  /// OUTSIDE or the point leaves the grid; -inf propagates.
  std::optional<double> interpolate(const Point& p) const {
    const int m = rank();
    std::array<std::size_t, kMaxRank> base{};
    std::array<double, kMaxRank> t{};
    constexpr double slack = 1e-9;
    for (int j = 0; j < m; ++j) {
      const double s = (p[j] - spec_.origin[j]) / spec_.spacing[j];
      const double last = static_cast<double>(spec_.shape[j] - 1);
      if (!(s >= -slack && s <= last + slack)) return std::nullopt;
      const double sc = std::clamp(s, 0.0, last);
      auto i0 = static_cast<std::size_t>(std::floor(sc));
      if (i0 + 1 >= spec_.shape[j]) i0 = spec_.shape[j] - 2;
      base[j] = i0;
      t[j] = sc - static_cast<double>(i0);
    }
    double acc = 0.0;
    bool neg_inf = false;
    for (int corner = 0; corner < (1 << m); ++corner) {
      double w = 1.0;
      Index idx{};
      for (int j = 0; j < m; ++j) {
        const bool hi = (corner >> j) & 1;
        w *= hi ? t[j] : 1.0 - t[j];
        idx[j] = base[j] + (hi ? 1 : 0);
      }
      if (w == 0.0) continue;
      const std::size_t f = spec_.flatten(idx);
      if (mask_[f] == NodeTag::outside) return std::nullopt;
      if (values_[f] == kNegInf) {
        neg_inf = true;
        continue;
      }
      acc += w * values_[f];
    }
    if (neg_inf) return kNegInf;
    return acc;
  }

  bool operator==(const ScalarField& o) const {
    if (!(spec_ == o.spec_) || mask_ != o.mask_) return false;
    return std::memcmp(values_.data(), o.values_.data(), values_.size() * sizeof(double)) == 0;
  }

 private:
  GridSpec spec_;
  std::vector<double> values_;
  std::vector<NodeTag> mask_;
};

/// Tags INSIDE nodes that have an OUTSIDE Moore neighbour as BAND.
inline void assign_band(const GridSpec& spec, std::vector<NodeTag>& mask) {
  std::vector<NodeTag> out = mask;
  parallel_for(spec.size(), [&](std::size_t i) {
    if (mask[i] != NodeTag::inside) return;
    bool near_outside = false;
    for_each_moore_neighbor(spec, i, [&](std::size_t nb) {
      if (mask[nb] == NodeTag::outside) near_outside = true;
    });
    if (near_outside) out[i] = NodeTag::band;
  });
  mask = std::move(out);
}

using Evaluator = std::function<double(const Point&)>;
using Predicate = std::function<bool(const Point&)>;

/// Samples `evaluator` on the nodes where `inside` holds. OUTSIDE nodes carry 0.
inline ScalarField build_field(const GridSpec& spec, const Evaluator& evaluator, const Predicate& inside) {
  spec.validate();
  const std::size_t n = spec.size();
  std::vector<NodeTag> mask(n);
  parallel_for(n, [&](std::size_t i) { mask[i] = inside(spec.point(i)) ? NodeTag::inside : NodeTag::outside; });
  assign_band(spec, mask);
  std::vector<double> values(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    if (mask[i] == NodeTag::outside) return;
    const double v = evaluator(spec.point(i));
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw Error(ErrorKind::numerical, "evaluator returned non-finite value at node " + std::to_string(i));
    values[i] = v;
  });
  return ScalarField(spec, std::move(values), std::move(mask));
}

// ---------------------------------------------------------------------------
// Sphere quadrature

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

/// Surface measure of the sphere of radius r in R^m.
inline double sphere_measure(int m, double r) {
  const double half = 0.5 * m;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half) * std::pow(r, m - 1);
}

enum class Sector : std::uint8_t { a, b };

struct SphereSample {
  int rank = 2;
  Point center{};
  double radius = 0.0;
  std::vector<Point> nodes;
  std::vector<double> weights;
  std::vector<Sector> sectors;  // all B until tagged
  double alpha = 0.0;           // sigma(A) / sigma(S)

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Quadrature on the sphere |x - center| = radius. `resolution` is the number
/// of angular nodes in m = 2, and the Gauss-Legendre order per polar angle
/// otherwise (azimuth gets twice as many uniform nodes).
inline SphereSample make_sphere_sample(int rank, const Point& center, double radius, int resolution) {
  if (rank < 2 || rank > kMaxRank) throw Error(ErrorKind::invalid_argument, "sphere rank must be 2..4");
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_argument, "sphere radius must be positive");
  if (resolution < 4) throw Error(ErrorKind::invalid_argument, "sphere resolution must be >= 4");
  SphereSample s;
  s.rank = rank;
  s.center = center;
  s.radius = radius;
  const double pi = std::numbers::pi;
  auto push = [&](Point dir, double w) {
    Point p = center;
    for (int j = 0; j < rank; ++j) p[j] += radius * dir[j];
    s.nodes.push_back(p);
    s.weights.push_back(w);
  };
  if (rank == 2) {
    const double w = 2.0 * pi * radius / resolution;
    for (int i = 0; i < resolution; ++i) {
      const double th = 2.0 * pi * i / resolution;
      push(Point{std::cos(th), std::sin(th), 0.0, 0.0}, w);
    }
  } else if (rank == 3) {
    std::vector<double> gx, gw;
    gauss_legendre(resolution, gx, gw);
    const int naz = 2 * resolution;
    for (int i = 0; i < resolution; ++i) {
      const double ct = gx[i];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int k = 0; k < naz; ++k) {
        const double ph = 2.0 * pi * k / naz;
        push(Point{st * std::cos(ph), st * std::sin(ph), ct, 0.0}, gw[i] * 2.0 * pi / naz * radius * radius);
      }
    }
  } else {
    // (psi, theta, phi) hyperspherical; dS = r^3 sin^2 psi sin theta.
    std::vector<double> gx, gw;
    gauss_legendre(resolution, gx, gw);
    const int naz = 2 * resolution;
    const double r3 = radius * radius * radius;
    for (int a = 0; a < resolution; ++a) {
      const double psi = 0.5 * pi * (gx[a] + 1.0);
      const double wpsi = 0.5 * pi * gw[a] * std::sin(psi) * std::sin(psi);
      for (int i = 0; i < resolution; ++i) {
        const double ct = gx[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int k = 0; k < naz; ++k) {
          const double ph = 2.0 * pi * k / naz;
          const double sp = std::sin(psi);
          push(Point{sp * st * std::cos(ph), sp * st * std::sin(ph), sp * ct, std::cos(psi)},
               wpsi * gw[i] * 2.0 * pi / naz * r3);
        }
      }
    }
  }
  s.sectors.assign(s.nodes.size(), Sector::b);
  return s;
}

/// Open cone with apex at the origin, given as a membership test on offsets.
using ConeTest = std::function<bool(const Point& offset)>;

/// Tags nodes lying in apex + cone as A (strict membership; ties go to B) and
/// recomputes alpha.
inline void tag_sectors(SphereSample& s, const Point& apex, const ConeTest& cone) {
  double wa = 0.0, wt = 0.0;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    s.sectors[i] = cone(s.nodes[i] - apex) ? Sector::a : Sector::b;
    if (s.sectors[i] == Sector::a) wa += s.weights[i];
    wt += s.weights[i];
  }
  s.alpha = wa / wt;
}

/// {x_m < -b |x'|}, the downward cone of slope b in R^m.
inline ConeTest slope_cone(int rank, double b) {
  return [rank, b](const Point& y) {
    double r2 = 0.0;
    for (int j = 0; j < rank - 1; ++j) r2 += y[j] * y[j];
    return y[rank - 1] < -b * std::sqrt(r2);
  };
}

struct SphereMeans {
  double total = 0.0;
  double a = 0.0;
  double b = 0.0;
  double max = kNegInf;  // largest sampled value (M_n)
};

inline SphereMeans sphere_average(const ScalarField& field, const SphereSample& s) {
  SphereMeans out;
  double sum = 0.0, sum_a = 0.0, sum_b = 0.0, w_all = 0.0, w_a = 0.0, w_b = 0.0;
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    const auto v = field.interpolate(s.nodes[i]);
    if (!v) throw Error(ErrorKind::domain, "sphere quadrature node " + std::to_string(i) + " leaves the domain");
    const double w = s.weights[i];
    sum += w * *v;
    w_all += w;
    if (s.sectors[i] == Sector::a) {
      sum_a += w * *v;
      w_a += w;
    } else {
      sum_b += w * *v;
      w_b += w;
    }
    out.max = std::max(out.max, *v);
  }
  out.total = sum / w_all;
  out.a = w_a > 0.0 ? sum_a / w_a : 0.0;
  out.b = w_b > 0.0 ? sum_b / w_b : 0.0;
  return out;
}

namespace detail {
template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol = 1e-14) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Fraction of the unit sphere in R^m lying in {x_m < -b |x'|}.
inline double cone_solid_angle_fraction(double b, int m) {
  if (m < 2) throw Error(ErrorKind::invalid_argument, "dimension must be >= 2");
  if (!(b >= 0.0)) throw Error(ErrorKind::invalid_argument, "cone slope must be >= 0");
  if (b == 0.0) return 0.5;
  const double half_angle = std::atan2(1.0, b);  // angle from the -e_m axis
  if (m == 2) return half_angle / std::numbers::pi;
  const int p = m - 2;
  auto integrand = [p](double t) { return std::pow(std::sin(t), p); };
  const double full = std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (p + 1)) / std::tgamma(0.5 * p + 1.0);
  return integrate_adaptive(integrand, 0.0, half_angle) / full;
}

// ---------------------------------------------------------------------------
// PSHF1 persistence

inline constexpr char kFieldMagic[5] = {'P', 'S', 'H', 'F', '1'};

namespace detail {
static_assert(std::endian::native == std::endian::little, "PSHF1 writer assumes a little-endian host");

template <class T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <class T>
T take(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw Error(ErrorKind::format, "truncated PSHF payload");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}
}  // namespace detail

inline std::string encode_field(const ScalarField& f) {
  std::string buf(kFieldMagic, 5);
  const GridSpec& g = f.spec();
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(g.rank()));
  for (int j = 0; j < g.rank(); ++j) {
    detail::put<std::uint64_t>(buf, g.shape[j]);
    detail::put<double>(buf, g.origin[j]);
    detail::put<double>(buf, g.spacing[j]);
  }
  for (double v : f.values()) detail::put<double>(buf, v);
  for (NodeTag t : f.mask()) buf.push_back(static_cast<char>(t));
  return buf;
}

inline ScalarField decode_field(const std::string& buf) {
  if (buf.size() < 5 || std::memcmp(buf.data(), kFieldMagic, 4) != 0)
    throw Error(ErrorKind::format, "bad PSHF magic");
  if (buf[4] != kFieldMagic[4]) throw Error(ErrorKind::format, "unsupported PSHF version");
  std::size_t pos = 5;
  const auto rank = detail::take<std::uint32_t>(buf, pos);
  if (rank < 2 || rank > kMaxRank) throw Error(ErrorKind::format, "PSHF rank out of range");
  GridSpec g;
  for (std::uint32_t j = 0; j < rank; ++j) {
    g.shape.push_back(detail::take<std::uint64_t>(buf, pos));
    g.origin.push_back(detail::take<double>(buf, pos));
    g.spacing.push_back(detail::take<double>(buf, pos));
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::format, std::string("PSHF grid header invalid: ") + e.what());
  }
  const std::size_t n = g.size();
  if (buf.size() - pos != n * (sizeof(double) + 1)) throw Error(ErrorKind::format, "PSHF payload size mismatch");
  std::vector<double> values(n);
  std::memcpy(values.data(), buf.data() + pos, n * sizeof(double));
  pos += n * sizeof(double);
  std::vector<NodeTag> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = static_cast<unsigned char>(buf[pos + i]);
    if (b > 2) throw Error(ErrorKind::format, "PSHF mask byte out of range at node " + std::to_string(i));
    mask[i] = static_cast<NodeTag>(b);
  }
  return ScalarField(std::move(g), std::move(values), std::move(mask));
}

inline void write_field(const ScalarField& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
  const std::string buf = encode_field(f);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

inline ScalarField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_field(buf);
}

}  // namespace pshlab

#endif  // PSHLAB_FIELD_GRID_HPP
