#include <gtest/gtest.h>

#include <cmath>

#include "pshlab/boundary_approx.hpp"
#include "test_oracles.hpp"

using namespace pshlab;

namespace {

const CapDomain& flat_cap() {
  static const CapDomain cap(LipschitzGraph::constant(1.0, 3.0), 2);
  return cap;
}

template <class F>
ScalarField on_cap(std::size_t n, F&& f) {
  const auto& cap = flat_cap();
  return build_field(cap.grid(n), f, [&](const Point& z) { return cap.contains(z); });
}

double squared_norm(const Point& z) { return z[0] * z[0] + z[1] * z[1]; }

double log_pole(const Point& z) { return 0.5 * std::log(z[0] * z[0] + (z[1] - 3.0) * (z[1] - 3.0)); }

double at(const ScalarField& f, const Point& p) {
  const auto v = f.interpolate(p);
  if (!v) throw std::runtime_error("probe outside the field");
  return *v;
}

}  // namespace

TEST(Containment, ShellMustSitInsideTheEqualitySet) {
  const auto f = on_cap(33, [](const Point&) { return 0.0; });
  ErosionMask om2;
  om2.member.assign(f.size(), true);
  // exactly one node outside Omega_2: the shell is it and its neighbours
  std::size_t c = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.tag(i) == NodeTag::inside) {
      c = i;
      break;
    }
  om2.member[c] = false;
  auto rho = f;
  auto phi = f.with_values(std::vector<double>(f.size(), -1.0));  // phi~ == rho' - 1 everywhere
  EXPECT_TRUE(check_containment(phi, rho, 1.0, om2).passed);
  auto v = phi.values();
  std::size_t far = 0;
  for_each_moore_neighbor(f.spec(), c, [&](std::size_t nb) {
    if (f.in_domain(nb)) far = nb;
  });
  // a neighbour of a neighbour breaking equality still breaks the interior condition
  std::size_t second = far;
  for_each_moore_neighbor(f.spec(), far, [&](std::size_t nb) {
    if (f.in_domain(nb) && nb != c && nb != far) second = nb;
  });
  v[second] = 0.0;
  const auto rep = check_containment(phi.with_values(v), rho, 1.0, om2);
  EXPECT_FALSE(rep.passed);
  EXPECT_GE(rep.failing, 1u);
}

TEST(RegularizationParams, Validation) {
  RegularizationParams p;
  EXPECT_NO_THROW(p.validate());
  p.ks = {1, 1};
  EXPECT_THROW(p.validate(), Error);
  p.ks = {1, 2};
  p.eps = std::vector<double>{0.1, 0.2};
  EXPECT_THROW(p.validate(), Error);
  p.eps = std::vector<double>{0.1};
  EXPECT_THROW(p.validate(), Error);
  p.eps.reset();
  p.tolerance = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(RegularizeBoundary, ConstantInputStaysWithinOneOverK) {
  const auto u = on_cap(129, [](const Point&) { return 0.0; });
  const auto seq = regularize_boundary(flat_cap(), u, RegularizationParams{});
  ASSERT_EQ(seq.entries.size(), 4u);
  const auto chk = check_sequence(seq);
  EXPECT_TRUE(chk.passed(seq.tolerance));
  const auto& g = u.spec();
  for (const auto& e : seq.entries)
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!u.in_domain(i) || squared_norm(g.point(i)) > 0.25) continue;
      EXPECT_GE(e.u_hat[i], -seq.tolerance);
      EXPECT_LE(e.u_hat[i], 1.0 / e.k + seq.tolerance);
    }
}

TEST(RegularizeBoundary, SmoothInputDecreasesButKeepsTheClampGap) {
  // max(u, -k) is a subsolution below every obstacle of the chain, so at the
  // origin u_hat_8 >= -8 while u = -10: the gap cannot fall below about 2.
  const auto u = on_cap(129, [](const Point& z) { return squared_norm(z) - 10.0; });
  const auto seq = regularize_boundary(flat_cap(), u, RegularizationParams{});
  EXPECT_TRUE(check_sequence(seq).passed(seq.tolerance));
  const auto& g = u.spec();
  std::vector<double> gap;
  for (const auto& e : seq.entries) {
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u.in_domain(i) && squared_norm(g.point(i)) <= 0.25) worst = std::max(worst, e.u_hat[i] - u[i]);
    gap.push_back(worst);
  }
  for (std::size_t j = 1; j < gap.size(); ++j) EXPECT_LT(gap[j], gap[j - 1]);
  EXPECT_GE(gap.back(), 2.0 - 0.25 - 1e-8);
  EXPECT_GT(gap.back(), 3.0 / 8.0 + 5.0 * g.max_spacing());
}

TEST(RegularizeBoundary, LogPoleConvergesAtProbes) {
  const auto u = on_cap(129, log_pole);
  const auto seq = regularize_boundary(flat_cap(), u, RegularizationParams{});
  EXPECT_GT(seq.input_residual, seq.tolerance);  // discrete log is not a subsolution
  EXPECT_GT(seq.projection_gap, 0.0);
  EXPECT_TRUE(check_sequence(seq).passed(seq.tolerance));
  for (const auto& e : seq.entries)
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u.tag(i) == NodeTag::inside) {
        EXPECT_TRUE(std::isfinite(e.u_hat[i]));
      }
  for (const Point& z0 : {Point{0.0, 2.0}, Point{0.3, 1.0}, Point{-0.2, 0.0}}) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& e : seq.entries) {
      const double err = at(e.u_hat, z0) - log_pole(z0);
      EXPECT_LE(err, prev);
      prev = err;
    }
    EXPECT_LE(prev, 1.0 / 8.0 + seq.projection_gap + 0.05);
  }
}

TEST(RegularizeBoundary, MonotoneInInputForSharedParameters) {
  const auto u = on_cap(65, [](const Point& z) { return 0.1 * squared_norm(z); });
  auto vv = u.values();
  for (double& x : vv) x += 0.5;
  const auto v = u.with_values(vv);
  RegularizationParams p;
  p.ks = {1, 2, 4};
  const auto su = regularize_boundary(flat_cap(), u, p);
  p.profile = su.profile;
  p.eps = std::vector<double>{};
  for (const auto& e : su.entries) p.eps->push_back(e.eps);
  const auto sv = regularize_boundary(flat_cap(), v, p);
  for (std::size_t j = 0; j < su.entries.size(); ++j)
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u.in_domain(i)) {
        EXPECT_LE(su.entries[j].u_hat[i], sv.entries[j].u_hat[i] + 2.0 * p.tolerance);
      }
}

TEST(RegularizeBoundary, EmptyEqualitySetNamesK) {
  const auto u = on_cap(65, [](const Point&) { return 0.0; });
  RegularizationParams p;
  p.ks = {1, 2};
  p.profile = ExhaustionProfile::from_pieces({0.0, 1.0}, {-100.0, -99.0}, {1.0, 1.0});
  try {
    regularize_boundary(flat_cap(), u, p);
    FAIL() << "expected a containment error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::geometry);
    EXPECT_NE(std::string(e.what()).find("k = 1"), std::string::npos);
  }
}

TEST(Gluing, ZeroInputGluesAndMisGluedFieldIsCaught) {
  const auto u = on_cap(129, [](const Point&) { return 0.0; });
  RegularizationParams p;
  p.min_slope = 1.0;  // mild profile, so a unit jump is not absorbed by its convexity
  const auto seq = regularize_boundary(flat_cap(), u, p);
  for (const auto& e : seq.entries) {
    const auto ok = gluing_check(e, seq.rho_prime, seq.tolerance);
    EXPECT_TRUE(ok.passed()) << "k = " << e.k;
    EXPECT_LE(ok.max_gap, 2.0 * seq.tolerance);
    const auto bad = gluing_check(e, seq.rho_prime, seq.tolerance, DefectMode::subharmonic, 1.0);
    EXPECT_FALSE(bad.seam.passed());
    ASSERT_TRUE(bad.seam.worst_node.has_value());
    const std::size_t w = *bad.seam.worst_node;
    EXPECT_FALSE(e.omega2.member[w]);
    bool touches = false;
    for_each_moore_neighbor(u.spec(), w, [&](std::size_t nb) { touches = touches || e.omega2.member[nb]; });
    EXPECT_TRUE(touches);
  }
}

TEST(ModulusTransfer, ConstantAndLogPoleAndZeroModulusControl) {
  const auto& cap = flat_cap();
  RegularizationParams p;
  p.ks = {1, 4};
  for (int which = 0; which < 2; ++which) {
    const auto u = which == 0 ? on_cap(256, [](const Point&) { return 1.5; }) : on_cap(256, log_pole);
    const auto seq = regularize_boundary(cap, u, p);
    const double h = u.spec().max_spacing();
    for (const auto& e : seq.entries) {
      const auto omega = transfer_modulus(cap, e);
      const auto rep = modulus_transfer_check(e, e.cone, omega);
      EXPECT_LE(rep.defect.worst, 2.0 * h * e.k) << "input " << which << ", k = " << e.k;
      EXPECT_GT(rep.defect.tested, 0u);
    }
    if (which == 1) {
      const auto& e = seq.entries.back();
      const auto rep = modulus_transfer_check(e, e.cone, ModulusOfContinuity({1.0}, {0.0}));
      EXPECT_GT(rep.defect.worst, 0.0);
      EXPECT_TRUE(rep.witness.has_value());
    }
  }
}

TEST(LemmaCertificate, AlphaFloorMatchesSampledOracle) {
  for (double b : {0.5, 1.0, 2.0}) {
    const double floor = offcentre_alpha_floor(2, b);
    const double ref = oracle::offcentre_cone_fraction_2d(b);
    EXPECT_LE(floor, ref);
    EXPECT_GE(floor, ref - 0.012);
    EXPECT_LT(floor, cone_solid_angle_fraction(b, 2));
  }
}

TEST(LemmaCertificate, SmoothFieldSlackHalvesUnderRefinement) {
  auto run = [](std::size_t n) {
    const auto u = build_field(
        make_grid({-2, -2}, {2, 2}, n), [](const Point& z) { return squared_norm(z) + 0.7 * z[0] - 0.4 * z[1]; },
        [](const Point&) { return true; });
    LemmaOptions o;
    o.P = Point{0.0, 0.5};
    o.cone = Cone::lemma(1.2, 1.0, 0.4, 2);
    return lemma_continuity_certificate(u, o);
  };
  const auto coarse = run(65), fine = run(129);
  ASSERT_FALSE(coarse.refused) << coarse.reason;
  ASSERT_FALSE(fine.refused) << fine.reason;
  EXPECT_TRUE(coarse.holds);
  EXPECT_TRUE(fine.holds);
  const double ratio = fine.slack / coarse.slack;
  EXPECT_GT(ratio, 0.4);
  EXPECT_LT(ratio, 0.6);
  for (const auto& pr : fine.probes) EXPECT_GE(pr.alpha, fine.alpha_floor);
}

TEST(LemmaCertificate, TruncatedLogChainVerifiedAtTenProbes) {
  const Point Q{1.6, 1.8};  // outside B + K for P = 0, R = 0.3, depth 1, slope 1
  const auto raw = build_field(
      make_grid({-2, -2}, {2, 2}, 161),
      [&](const Point& z) { return std::max(0.5 * std::log(std::pow(z[0] - Q[0], 2) + std::pow(z[1] - Q[1], 2)), -5.0); },
      [](const Point&) { return true; });
  EnvelopeProblem proj;
  proj.obstacle = raw;
  const auto u = solve_envelope(proj).u;  // certified discrete subsolution
  LemmaOptions o;
  o.cone = Cone::lemma(1.0, 1.0, 0.3, 2);
  const double h = u.spec().max_spacing();
  o.radii = {4.0 * h, 5.0 * h};
  o.directions = 5;
  const auto cert = lemma_continuity_certificate(u, o);
  ASSERT_FALSE(cert.refused) << cert.reason;
  ASSERT_EQ(cert.probes.size(), 10u);
  for (const auto& pr : cert.probes) {
    EXPECT_TRUE(pr.chain_mean);
    EXPECT_TRUE(pr.chain_a);
    EXPECT_TRUE(pr.chain_b);
    EXPECT_TRUE(pr.holds);
    EXPECT_NEAR(pr.lower_bound, pr.u_P + (1 - pr.alpha) / pr.alpha * (pr.u_P - pr.max) - pr.delta, 1e-12);
  }
  EXPECT_TRUE(cert.holds);
}

TEST(LemmaCertificate, RefusesDeltaThatDoesNotVanish) {
  const auto u = build_field(
      make_grid({-2, -2}, {2, 2}, 65), [](const Point& z) { return squared_norm(z); }, [](const Point&) { return true; });
  LemmaOptions o;
  o.cone = Cone::lemma(1.0, 1.0, 0.3, 2);
  o.delta = ModulusOfContinuity({0.01, 1.0}, {1.0, 1.0});
  const auto cert = lemma_continuity_certificate(u, o);
  EXPECT_TRUE(cert.refused);
  EXPECT_NE(cert.reason.find("delta"), std::string::npos);
  EXPECT_TRUE(cert.probes.empty());
}

TEST(LemmaCertificate, RejectsProbesPastTheCone) {
  const auto u = build_field(
      make_grid({-2, -2}, {2, 2}, 65), [](const Point& z) { return squared_norm(z); }, [](const Point&) { return true; });
  LemmaOptions o;
  o.cone = Cone::lemma(0.3, 1.0, 0.3, 2);
  o.radii = {0.2};
  EXPECT_THROW(lemma_continuity_certificate(u, o), Error);
}
