#ifndef PSHLAB_BOUNDARY_APPROX_HPP
#define PSHLAB_BOUNDARY_APPROX_HPP

// Decreasing approximation of a subharmonic input on the cap by envelopes of
//   phi~_k = max(phi_k, rho - k),  rho = p(d),
// where phi_k is the sup-convolution of u and d = -log dist(., boundary).
// Near the part of the boundary swept by the eroded cone, phi~_k coincides
// with rho' - k (rho' = p(d'), d' the U-only distance), which is what makes
// the gluing and the modulus transfer work.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pshlab/domains.hpp"
#include "pshlab/envelope.hpp"
#include "pshlab/subharmonic.hpp"

namespace pshlab {

struct RegularizationParams {
  std::vector<int> ks{1, 2, 4, 8};  // strictly increasing
  double eps0 = 0.4;                // eps for the j-th index is eps0 * 2^-j before refinement
  int eps_refinements = 6;          // halvings tried when containment fails
  double tolerance = 1e-8;
  DefectMode mode = DefectMode::subharmonic;
  double min_slope = 100.0;  // steepness of p; large values keep rho - k small inside
  int profile_breakpoints = 64;
  double profile_eps = 0.05;  // eps whose boundary shell fixes where p starts to dominate
  std::optional<ExhaustionProfile> profile;  // shared profile, chosen from phi_1 when empty
  std::optional<std::vector<double>> eps;    // fixed schedule, one eps per k
  std::optional<Point> probe_point;          // centre of the modulus estimate; default (0', F(0'))
  double probe_radius = 0.25;

  void validate() const {
    if (ks.empty()) throw Error(ErrorKind::invalid_argument, "no indices k");
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (ks[j] < 1) throw Error(ErrorKind::invalid_argument, "indices k must be positive");
      if (j > 0 && ks[j] <= ks[j - 1]) throw Error(ErrorKind::invalid_argument, "indices k must be strictly increasing");
    }
    if (!(eps0 > 0.0) || !(profile_eps > 0.0)) throw Error(ErrorKind::invalid_argument, "eps0 and profile_eps must be positive");
    if (eps_refinements < 0) throw Error(ErrorKind::invalid_argument, "eps refinements must be >= 0");
    if (!(tolerance > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
    if (eps) {
      if (eps->size() != ks.size()) throw Error(ErrorKind::invalid_argument, "eps schedule needs one value per k");
      for (std::size_t j = 0; j < eps->size(); ++j) {
        if (!((*eps)[j] > 0.0)) throw Error(ErrorKind::invalid_argument, "eps schedule must be positive");
        if (j > 0 && (*eps)[j] > (*eps)[j - 1]) throw Error(ErrorKind::invalid_argument, "eps schedule must be nonincreasing");
      }
    }
  }
};

struct ContainmentReport {
  bool passed = false;
  std::size_t required = 0;  // nodes of cl(Omega \ Omega_2)
  std::size_t failing = 0;
  std::optional<std::size_t> first_failure;
};

struct ApproxEntry {
  int k = 0;
  double eps = 0.0;
  Cone cone;
  ErosionMask omega1, omega2;
  ContainmentReport containment;
  ScalarField phi, phi_tilde, u_hat;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::optional<ModulusOfContinuity> modulus_near_probe;
};

struct ApproxSequence {
  ScalarField input;      // as supplied
  ScalarField certified;  // input, or its discrete projection when the input is not a subsolution
  double input_residual = 0.0;
  double projection_gap = 0.0;  // max(input - certified)
  ExhaustionProfile profile;
  double t_start = 0.0;
  ScalarField d, d_prime, rho, rho_prime;
  std::optional<DefectReport> d_defect_near_boundary;  // GRID_RING defect of d on the boundary shell
  std::vector<ApproxEntry> entries;
  double tolerance = 0.0;
  DefectMode mode = DefectMode::subharmonic;
};

// ---------------------------------------------------------------------------

namespace detail {

/// cl_Omega(Omega \ Omega_2): domain nodes outside Omega_2 and their Moore
/// neighbours in the domain.
inline std::vector<bool> boundary_shell(const ScalarField& domain, const ErosionMask& omega2) {
  const auto& g = domain.spec();
  std::vector<bool> shell(domain.size(), false);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (!domain.in_domain(i) || omega2.member[i]) continue;
    shell[i] = true;
    for_each_moore_neighbor(g, i, [&](std::size_t nb) {
      if (domain.in_domain(nb)) shell[nb] = true;
    });
  }
  return shell;
}

inline ScalarField pointwise_max_shift(const ScalarField& phi, const ScalarField& rho, double k) {
  std::vector<double> v(phi.size(), 0.0);
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (phi.in_domain(i)) v[i] = std::max(phi[i], rho[i] - k);
  return phi.with_values(std::move(v));
}

inline std::vector<bool> ball_mask(const ScalarField& f, const Point& c, double r) {
  const auto& g = f.spec();
  std::vector<bool> out(f.size(), false);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.in_domain(i)) continue;
    const Point z = g.point(i);
    double d2 = 0.0;
    for (int j = 0; j < g.rank(); ++j) d2 += (z[j] - c[j]) * (z[j] - c[j]);
    out[i] = d2 <= r * r;
  }
  return out;
}

}  // namespace detail

/// cl(Omega \ Omega_2) must lie in the interior of {phi~ == rho' - k}: every
/// shell node and all its Moore neighbours in the domain satisfy the equality.
inline ContainmentReport check_containment(const ScalarField& phi_tilde, const ScalarField& rho_prime, double k,
                                           const ErosionMask& omega2) {
  const auto& g = phi_tilde.spec();
  const auto shell = detail::boundary_shell(phi_tilde, omega2);
  auto equal = [&](std::size_t i) { return phi_tilde[i] == rho_prime[i] - k; };
  ContainmentReport rep;
  for (std::size_t i = 0; i < phi_tilde.size(); ++i) {
    if (!shell[i]) continue;
    ++rep.required;
    bool ok = equal(i);
    for_each_moore_neighbor(g, i, [&](std::size_t nb) {
      if (phi_tilde.in_domain(nb) && !equal(nb)) ok = false;
    });
    if (!ok) {
      ++rep.failing;
      if (!rep.first_failure) rep.first_failure = i;
    }
  }
  rep.passed = rep.failing == 0;
  return rep;
}

inline Cone theorem_cone(const CapDomain& cap, double eps) { return Cone::theorem(eps, 7.0 * cap.C(), cap.rank()); }

/// The decreasing sequence u_hat_k for the input u on the cap grid.
inline ApproxSequence regularize_boundary(const CapDomain& cap, const ScalarField& u, const RegularizationParams& params) {
  params.validate();
  const auto& g = u.spec();
  if (g.rank() != cap.rank()) throw Error(ErrorKind::invalid_argument, "field rank differs from the cap");
  for (std::size_t i = 0; i < u.size(); ++i) {
    const bool inside = cap.contains(g.point(i));
    if (inside != u.in_domain(i)) throw Error(ErrorKind::invalid_argument, "field mask is not the cap mask");
    if (inside && !std::isfinite(u[i])) throw Error(ErrorKind::numerical, "input must be finite on the cap nodes");
  }

  ApproxSequence seq;
  seq.input = u;
  seq.tolerance = params.tolerance;
  seq.mode = params.mode;

  // Certified input.
  EnvelopeProblem cert;
  cert.obstacle = u;
  cert.mode = params.mode;
  cert.tolerance = params.tolerance;
  seq.input_residual = envelope_residual(u, cert);
  if (seq.input_residual <= params.tolerance) {
    seq.certified = u;
  } else {
    const auto proj = solve_envelope(cert);
    if (!proj.converged) throw Error(ErrorKind::numerical, "projection of the input did not converge");
    seq.certified = proj.u;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u.in_domain(i)) seq.projection_gap = std::max(seq.projection_gap, u[i] - proj.u[i]);
  }

  seq.d = log_distance_field(cap, g);
  seq.d_prime = log_distance_U_field(cap, g);
  const auto& domain = seq.d;

  // eps candidates per k
  std::vector<std::vector<double>> candidates;
  for (std::size_t j = 0; j < params.ks.size(); ++j) {
    std::vector<double> c;
    if (params.eps) {
      c.push_back((*params.eps)[j]);
    } else {
      double e = params.eps0 * std::ldexp(1.0, -static_cast<int>(j));
      for (int r = 0; r <= params.eps_refinements; ++r, e *= 0.5) c.push_back(e);
    }
    candidates.push_back(std::move(c));
  }

  const auto phi1 = sup_convolution(seq.certified, 1.0);
  if (params.profile) {
    seq.profile = *params.profile;
    seq.t_start = params.profile->breakpoints.front();
  } else {
    // p dominates phi_1 + k on the shell of profile_eps; thicker shells fail
    // the containment test and their eps is refined.
    const auto widest = erosion_set(cap, domain, theorem_cone(cap, params.profile_eps), 2);
    const auto shell = detail::boundary_shell(domain, widest);
    double t0 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < shell.size(); ++i) {
      if (!shell[i]) continue;
      t0 = std::min(t0, seq.d[i]);
      for_each_moore_neighbor(g, i, [&](std::size_t nb) {
        if (domain.in_domain(nb)) t0 = std::min(t0, seq.d[nb]);
      });
    }
    if (!std::isfinite(t0)) throw Error(ErrorKind::geometry, "the eroded set covers the whole cap");
    ProfileOptions opt;
    opt.t_start = t0;
    opt.min_slope = params.min_slope;
    opt.lift = static_cast<double>(params.ks.back()) + 1.0;
    opt.breakpoints = params.profile_breakpoints;
    seq.profile = choose_profile(phi1, seq.d, opt);
    seq.t_start = t0;
    if (!verify_profile(seq.profile, phi1, seq.d, t0))
      throw Error(ErrorKind::numerical, "exhaustion profile failed its own check");
  }
  seq.rho = compose(seq.profile, seq.d);
  seq.rho_prime = compose(seq.profile, seq.d_prime);

  std::optional<ScalarField> previous;
  double eps_cap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < params.ks.size(); ++j) {
    const int k = params.ks[j];
    ApproxEntry e;
    e.k = k;
    e.phi = k == 1 ? phi1 : sup_convolution(seq.certified, static_cast<double>(k));
    e.phi_tilde = detail::pointwise_max_shift(e.phi, seq.rho, static_cast<double>(k));

    bool found = false;
    for (double eps : candidates[j]) {
      if (eps > eps_cap) continue;
      const Cone cone = theorem_cone(cap, eps);
      auto omega2 = erosion_set(cap, domain, cone, 2);
      auto rep = check_containment(e.phi_tilde, seq.rho_prime, static_cast<double>(k), omega2);
      if (rep.passed) {
        e.eps = eps;
        e.cone = cone;
        e.omega1 = erosion_set(cap, domain, cone, 1);
        e.omega2 = std::move(omega2);
        e.containment = rep;
        found = true;
        break;
      }
      e.containment = rep;
    }
    if (!found) {
      std::ostringstream msg;
      msg << "containment of cl(Omega \\ Omega_2) in int{phi~ = rho' - k} fails for k = " << k
          << " at every scheduled eps (" << e.containment.failing << " failing nodes at the smallest)";
      throw Error(ErrorKind::geometry, msg.str());
    }
    eps_cap = e.eps;

    EnvelopeProblem prob;
    prob.mode = params.mode;
    prob.tolerance = params.tolerance;
    if (previous) {
      std::vector<double> ob(u.size(), 0.0);
      for (std::size_t i = 0; i < u.size(); ++i)
        if (u.in_domain(i)) ob[i] = std::min(e.phi_tilde[i], (*previous)[i]);
      prob.obstacle = u.with_values(std::move(ob));
    } else {
      prob.obstacle = e.phi_tilde;
    }
    const auto sol = solve_envelope(prob);
    e.u_hat = sol.u;
    e.residual = sol.residual;
    e.iterations = sol.iterations;
    e.converged = sol.converged;
    previous = e.u_hat;

    const Point probe = params.probe_point.value_or([&] {
      Point p{};
      p[cap.rank() - 1] = cap.graph()(Point{});
      return p;
    }());
    const auto near = detail::ball_mask(e.u_hat, probe, params.probe_radius);
    if (std::count(near.begin(), near.end(), true) > 1) {
      try {
        e.modulus_near_probe = empirical_modulus(e.u_hat, near, 4.0 * g.max_spacing());
      } catch (const Error&) {
        e.modulus_near_probe.reset();
      }
    }
    seq.entries.push_back(std::move(e));
  }

  // d is expected to be subharmonic near the shell; measured, not assumed.
  {
    const auto shell = detail::boundary_shell(domain, seq.entries.front().omega2);
    std::vector<bool> free(shell.size(), false);
    for (std::size_t i = 0; i < shell.size(); ++i) free[i] = shell[i] && domain.tag(i) == NodeTag::inside;
    DefectOptions opt;
    opt.tolerance = params.tolerance;
    opt.restrict_to = &free;
    try {
      seq.d_defect_near_boundary = submean_defect(seq.d, opt);
    } catch (const Error&) {
      seq.d_defect_near_boundary.reset();
    }
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Sequence invariants

struct SequenceCheck {
  std::size_t increasing_nodes = 0;     // u_hat_{k'} > u_hat_k for k' > k
  std::size_t below_input_nodes = 0;    // u_hat_k < certified input - tolerance
  std::size_t sandwich_nodes = 0;       // Omega_2 nodes violating phi~ >= u_hat >= rho' - k
  double worst_sandwich = 0.0;          // largest (rho' - k) - u_hat on Omega_2
  double max_residual = 0.0;
  bool all_converged = true;

  bool passed(double tolerance) const {
    return increasing_nodes == 0 && below_input_nodes == 0 && sandwich_nodes == 0 && max_residual <= tolerance &&
           all_converged;
  }
};

/// The lower sandwich bound is compared with slack `sandwich_slack` (0 = exact).
inline SequenceCheck check_sequence(const ApproxSequence& seq, double sandwich_slack = 0.0) {
  SequenceCheck c;
  const auto& f = seq.certified;
  for (std::size_t j = 0; j < seq.entries.size(); ++j) {
    const auto& e = seq.entries[j];
    c.max_residual = std::max(c.max_residual, e.residual);
    c.all_converged = c.all_converged && e.converged;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.in_domain(i)) continue;
      if (j > 0 && e.u_hat[i] > seq.entries[j - 1].u_hat[i]) ++c.increasing_nodes;
      if (e.u_hat[i] < f[i] - seq.tolerance) ++c.below_input_nodes;
      if (!e.omega2.member[i]) continue;
      const double low = seq.rho_prime[i] - e.k;
      c.worst_sandwich = std::max(c.worst_sandwich, low - e.u_hat[i]);
      if (e.u_hat[i] > e.phi_tilde[i] || e.u_hat[i] < low - sandwich_slack) ++c.sandwich_nodes;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Gluing

struct GluingReport {
  double max_gap = 0.0;  // max |P_{Omega_2} phi~ - u_hat| on Omega_2
  double gap_tolerance = 0.0;
  bool restricted_converged = false;
  DefectReport seam;  // GRID_RING defect of the glued field on non-band cap nodes

  bool passed() const { return restricted_converged && max_gap <= gap_tolerance && seam.passed(); }
};

/// Glues the envelope on Omega_2 with rho' - k + outside_offset on the rest
/// of the cap. A nonzero offset produces a deliberately mis-glued field.
inline GluingReport gluing_check(const ApproxEntry& e, const ScalarField& rho_prime, double tolerance,
                                 DefectMode mode = DefectMode::subharmonic, double outside_offset = 0.0) {
  const auto& f = e.phi_tilde;
  EnvelopeProblem prob;
  prob.obstacle = f;
  prob.mode = mode;
  prob.tolerance = tolerance;
  prob.extra_pinned.assign(f.size(), false);
  for (std::size_t i = 0; i < f.size(); ++i) prob.extra_pinned[i] = f.in_domain(i) && !e.omega2.member[i];
  const auto sol = solve_envelope(prob);

  GluingReport rep;
  rep.gap_tolerance = 2.0 * tolerance;
  rep.restricted_converged = sol.converged;
  std::vector<double> v(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.in_domain(i)) continue;
    if (e.omega2.member[i]) {
      v[i] = sol.u[i];
      rep.max_gap = std::max(rep.max_gap, std::abs(sol.u[i] - e.u_hat[i]));
    } else {
      v[i] = rho_prime[i] - e.k + outside_offset;
    }
  }
  std::vector<bool> interior(f.size(), false);
  for (std::size_t i = 0; i < f.size(); ++i) interior[i] = f.tag(i) == NodeTag::inside;
  DefectOptions opt;
  opt.mode = mode;
  opt.tolerance = tolerance;
  opt.restrict_to = &interior;
  rep.seam = submean_defect(f.with_values(std::move(v)), opt);
  return rep;
}

// ---------------------------------------------------------------------------
// Modulus transfer

struct TransferReport {
  DefectReport defect;
  std::size_t skipped = 0;  // pairs with z + w not an interior cap node
  std::optional<std::pair<std::size_t, Point>> witness;
};

/// Modulus of continuity of phi~_k on L = L_eps + K_eps (lattice shifts of
/// the closed cone). An empty core gives the zero modulus.
inline ModulusOfContinuity transfer_modulus(const CapDomain& cap, const ApproxEntry& e) {
  const auto& f = e.phi_tilde;
  const auto& g = f.spec();
  const auto core = compact_core(cap, f, e.cone, e.omega1, e.omega2);
  const auto shifts = cone_lattice(e.cone, g);
  std::vector<bool> L(f.size(), false);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!core.core[i]) continue;
    L[i] = true;
    for (const auto& [dist, o] : shifts) {
      const auto s = shifted_node(g, i, o);
      if (s && f.in_domain(*s)) L[*s] = true;
    }
  }
  const double reach = std::hypot(e.cone.depth, e.cone.depth / e.cone.slope);
  const double t_max = std::max(reach, g.max_spacing());
  if (core.core_size() == 0) return ModulusOfContinuity({t_max}, {0.0});
  return empirical_modulus(f, L, t_max);
}

/// max over z in Omega_2 and lattice w in K_eps of u_hat(z + w) - u_hat(z) - omega(|w|).
inline TransferReport modulus_transfer_check(const ApproxEntry& e, const Cone& cone, const ModulusOfContinuity& omega,
                                             double tolerance = 0.0) {
  const auto& u = e.u_hat;
  const auto& g = u.spec();
  const auto shifts = cone_lattice(cone, g);
  if (shifts.empty()) throw Error(ErrorKind::invalid_argument, "cone holds no lattice shift at this resolution");
  std::vector<double> defect(u.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<char> tested(u.size(), 0);
  std::vector<std::size_t> skipped(u.size(), 0), arg(u.size(), 0);
  parallel_for(u.size(), [&](std::size_t i) {
    if (!e.omega2.member[i]) return;
    double worst = kNegInf;
    for (std::size_t k = 0; k < shifts.size(); ++k) {
      const auto s = shifted_node(g, i, shifts[k].second);
      if (!s || u.tag(*s) != NodeTag::inside) {
        ++skipped[i];
        continue;
      }
      const double d = u[*s] - u[i] - omega(shifts[k].first);
      if (d > worst) {
        worst = d;
        arg[i] = k;
      }
    }
    if (worst > kNegInf) {
      defect[i] = worst;
      tested[i] = 1;
    }
  });
  DefectOptions opt;
  opt.tolerance = tolerance;
  TransferReport rep{detail::finish_report(defect, tested, opt), 0, std::nullopt};
  for (std::size_t s : skipped) rep.skipped += s;
  if (rep.defect.worst_node) {
    Point w{};
    const auto& o = shifts[arg[*rep.defect.worst_node]].second;
    for (int j = 0; j < g.rank(); ++j) w[j] = o[j] * g.spacing[j];
    rep.witness = std::make_pair(*rep.defect.worst_node, w);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continuity certificate

/// Smallest fraction of the sphere |y| = 2 inside apex + {x_m < -b |x'|} over
/// apexes on the unit sphere, less a quadrature allowance.
inline double offcentre_alpha_floor(int rank, double b) {
  const auto cone = slope_cone(rank, b);
  double worst = 1.0;
  if (rank == 2) {
    auto s = make_sphere_sample(2, Point{}, 2.0, 4096);
    for (int j = 0; j < 720; ++j) {
      const double th = 2.0 * std::numbers::pi * j / 720;
      tag_sectors(s, Point{std::cos(th), std::sin(th)}, cone);
      worst = std::min(worst, s.alpha);
    }
    return std::max(0.0, worst - 0.01);
  }
  auto s = make_sphere_sample(rank, Point{}, 2.0, 24);
  const auto apexes = make_sphere_sample(rank, Point{}, 1.0, 8);
  for (const auto& a : apexes.nodes) {
    tag_sectors(s, a, cone);
    worst = std::min(worst, s.alpha);
  }
  return std::max(0.0, worst - 0.05);
}

struct LemmaOptions {
  Point P{};
  Cone cone;  // lemma variant: depth a, slope b, ball radius R
  std::optional<ModulusOfContinuity> delta;  // measured from u on the ball when empty
  std::vector<double> radii;                 // |x_n - P|; empty means {4 h}
  int directions = 8;
  int sphere_resolution = 256;
  double tolerance = 1e-8;
};

struct LemmaProbe {
  Point x{};
  double t = 0.0;
  double u_x = 0.0, u_P = 0.0;
  double alpha = 0.0;
  double mean = 0.0, mean_a = 0.0, mean_b = 0.0, max = 0.0;
  double delta = 0.0;
  double lower_bound = 0.0;
  bool chain_mean = false;   // u(P) <= mean over S_n (within interpolation slack)
  bool chain_a = false;      // mean over A_n <= u(x_n) + delta
  bool chain_b = false;      // mean over B_n <= M_n
  bool holds = false;        // u(x_n) >= lower bound - grid slack
};

struct LemmaCertificate {
  bool refused = false;
  std::string reason;
  std::vector<LemmaProbe> probes;
  std::size_t skipped = 0;
  double alpha_floor = 0.0;
  double lipschitz = 0.0;
  double grid_slack = 0.0;  // 2 h Lip
  double slack = 0.0;       // max over probes of (u(P) - LB)^+ + grid slack
  bool holds = false;
};

/// Lower bound for u near P from the sphere-splitting argument, evaluated
/// along probe sequences approaching P.
inline LemmaCertificate lemma_continuity_certificate(const ScalarField& u, const LemmaOptions& opt) {
  const auto& g = u.spec();
  const int m = g.rank();
  const Cone& K = opt.cone;
  if (K.variant != Cone::Variant::lemma || !(K.radius > 0.0) || K.empty())
    throw Error(ErrorKind::invalid_argument, "certificate needs a lemma cone with positive depth and radius");
  const double h = g.max_spacing();
  std::vector<double> radii = opt.radii.empty() ? std::vector<double>{4.0 * h} : opt.radii;
  for (double t : radii) {
    if (!(t > 0.0) || !(t < K.radius)) throw Error(ErrorKind::invalid_argument, "probe distance must lie in (0, R)");
    if (!(3.0 * t < K.depth)) throw Error(ErrorKind::invalid_argument, "probe spheres reach past the cone depth");
  }

  LemmaCertificate cert;
  const auto ball = detail::ball_mask(u, opt.P, K.radius);

  // Local Lipschitz constant over the probe spheres.
  const auto wide = detail::ball_mask(u, opt.P, 2.0 * *std::max_element(radii.begin(), radii.end()) + h);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!wide[i]) continue;
    const Point z = g.point(i);
    for_each_moore_neighbor(g, i, [&](std::size_t nb) {
      if (!u.in_domain(nb)) return;
      const Point y = g.point(nb) - z;
      double dist = 0.0;
      for (int j = 0; j < m; ++j) dist += y[j] * y[j];
      dist = std::sqrt(dist);
      cert.lipschitz = std::max(cert.lipschitz, std::abs(u[nb] - u[i]) / dist);
    });
  }
  cert.grid_slack = 2.0 * h * cert.lipschitz;

  // Preconditions.
  {
    std::vector<bool> free(u.size(), false);
    for (std::size_t i = 0; i < u.size(); ++i) free[i] = ball[i] && u.tag(i) == NodeTag::inside;
    DefectOptions dopt;
    dopt.tolerance = opt.tolerance;
    dopt.restrict_to = &free;
    const auto rep = submean_defect(u, dopt);
    if (!rep.passed()) {
      cert.refused = true;
      cert.reason = "u is not a discrete subsolution on the ball (defect " + std::to_string(rep.worst) + ")";
      return cert;
    }
  }
  const ModulusOfContinuity delta = opt.delta ? *opt.delta : cone_shift_modulus(u, K, ball);
  if (opt.delta) {
    const auto rep = cone_shift_check(u, K, delta, ball, opt.tolerance);
    if (!rep.defect.passed()) {
      cert.refused = true;
      cert.reason = "cone-shift hypothesis fails for the supplied delta";
      return cert;
    }
  }
  {
    const double t0 = delta.breakpoints().front();
    if (delta.values().front() > 2.0 * cert.lipschitz * t0 + opt.tolerance) {
      cert.refused = true;
      cert.reason = "delta does not vanish at 0 (delta(t0) = " + std::to_string(delta.values().front()) + ")";
      return cert;
    }
  }

  cert.alpha_floor = offcentre_alpha_floor(m, K.slope);
  const auto uP = u.interpolate(opt.P);
  if (!uP) throw Error(ErrorKind::domain, "P is not an interior point of the field");
  const ConeTest in_K = [&K](const Point& y) { return K.contains(y); };

  // Probe directions: unit vectors in the (x_0, x_last) plane, plus the other
  // axes in higher rank.
  std::vector<Point> dirs;
  for (int j = 0; j < opt.directions; ++j) {
    const double th = 2.0 * std::numbers::pi * j / opt.directions;
    Point d{};
    d[0] = std::cos(th);
    d[m - 1] = std::sin(th);
    dirs.push_back(d);
  }

  bool all = true;
  double worst_gap = 0.0;
  // Interleave directions so consecutive probes approach P from different sides.
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (double t : sorted)
    for (const auto& d : dirs) {
      LemmaProbe pr;
      pr.t = t;
      pr.x = opt.P + t * d;
      const auto ux = u.interpolate(pr.x);
      auto s = make_sphere_sample(m, opt.P, 2.0 * t, m == 2 ? opt.sphere_resolution : std::max(8, opt.sphere_resolution / 16));
      tag_sectors(s, pr.x, in_K);
      SphereMeans means;
      try {
        if (!ux) throw Error(ErrorKind::domain, "probe point leaves the domain");
        means = sphere_average(u, s);
      } catch (const Error&) {
        ++cert.skipped;
        continue;
      }
      pr.u_x = *ux;
      pr.u_P = *uP;
      pr.alpha = s.alpha;
      if (pr.alpha < cert.alpha_floor)
        throw Error(ErrorKind::internal, "sector fraction " + std::to_string(pr.alpha) + " below the geometric floor " +
                                             std::to_string(cert.alpha_floor));
      pr.mean = means.total;
      pr.mean_a = means.a;
      pr.mean_b = means.b;
      pr.max = means.max;
      pr.delta = delta(3.0 * t);
      pr.lower_bound = pr.u_P + (1.0 - pr.alpha) / pr.alpha * (pr.u_P - pr.max) - pr.delta;
      // interpolated means of a discrete subsolution carry an O(h^2 Lip / t) error
      const double interp = cert.grid_slack;
      pr.chain_mean = pr.u_P <= pr.mean + interp;
      pr.chain_a = pr.mean_a <= pr.u_x + pr.delta + interp;
      pr.chain_b = pr.mean_b <= pr.max;
      pr.holds = pr.u_x >= pr.lower_bound - cert.grid_slack;
      all = all && pr.holds;
      worst_gap = std::max(worst_gap, std::max(0.0, pr.u_P - pr.lower_bound));
      cert.probes.push_back(pr);
    }
  if (cert.probes.empty()) {
    cert.refused = true;
    cert.reason = "every probe sphere leaves the domain";
    return cert;
  }
  cert.slack = worst_gap + cert.grid_slack;
  cert.holds = all;
  return cert;
}

}  // namespace pshlab

#endif  // PSHLAB_BOUNDARY_APPROX_HPP
