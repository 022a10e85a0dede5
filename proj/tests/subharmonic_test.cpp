#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pshlab/subharmonic.hpp"

using namespace pshlab;

namespace {

const auto everywhere = [](const Point&) { return true; };

ScalarField on_square(std::size_t n, double half, const std::function<double(const Point&)>& f) {
  return build_field(make_grid({-half, -half}, {half, half}, n), f, everywhere);
}

ScalarField on_disc(std::size_t n, const std::function<double(const Point&)>& f) {
  return build_field(make_grid({-1, -1}, {1, 1}, n), f, [](const Point& z) { return z[0] * z[0] + z[1] * z[1] < 1.0; });
}

// Brute-force sup-convolution over all domain nodes.
std::vector<double> brute_sup_conv(const ScalarField& u, double k) {
  const auto& g = u.spec();
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!u.in_domain(i)) continue;
    double best = -1e300;
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (!u.in_domain(j)) continue;
      best = std::max(best, std::max(u[j], -k) - k * distance(g.point(i), g.point(j), g.rank()));
    }
    out[i] = best + 1.0 / k;
  }
  return out;
}

}  // namespace

TEST(GridStencil, SubharmonicWeightsFollowSpacing) {
  const auto g = make_grid({0, 0}, {1, 2}, 11);  // spacings 0.1, 0.2
  const auto st = make_grid_stencil(g, DefectMode::subharmonic);
  ASSERT_EQ(st.groups.size(), 1u);
  double sum = 0.0;
  for (double w : st.groups[0].weights) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_NEAR(st.groups[0].weights[0] / st.groups[0].weights[2], 4.0, 1e-12);
}

TEST(GridStencil, DirectionalNeedsIsotropicSpacing) {
  EXPECT_THROW(make_grid_stencil(make_grid({0, 0}, {1, 2}, 11), DefectMode::psh_directional), Error);
  const auto st = make_grid_stencil(make_grid({0, 0, 0, 0}, {1, 1, 1, 1}, 5), DefectMode::psh_directional);
  EXPECT_EQ(st.groups.size(), 6u);
}

TEST(SubmeanDefect, HarmonicHasZeroDefect) {
  const auto u = on_disc(41, [](const Point& z) { return 2.0 * z[0] - 0.5 * z[1] + 1.0; });
  for (auto kind : {StencilKind::grid_ring, StencilKind::circle}) {
    DefectOptions opt;
    opt.kind = kind;
    opt.radius = 0.1;
    opt.tolerance = 1e-9;
    std::vector<char> tested;
    const auto d = defect_values(u, opt, tested);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (tested[i]) {
        EXPECT_LE(std::abs(d[i]), 1e-9);
      }
  }
}

TEST(SubmeanDefect, SquaredNormHasNegativeDefect) {
  const auto u = on_square(41, 1.0, [](const Point& z) { return z[0] * z[0] + z[1] * z[1]; });
  const double h = 0.05;
  DefectOptions opt;
  std::vector<char> tested;
  const auto d = defect_values(u, opt, tested);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (tested[i]) {
      EXPECT_NEAR(d[i], -h * h, 1e-12);
    }
  // Circle mean of |z|^2 is |z0|^2 + r^2; bilinear interpolation only adds.
  opt.kind = StencilKind::circle;
  opt.radius = 0.2;
  const auto rep = submean_defect(u, opt);
  EXPECT_LE(rep.worst, -0.04 + 1e-12);
  EXPECT_GE(rep.worst, -0.04 - h * h);
}

TEST(SubmeanDefect, NegativeLogPoleIsFlagged) {
  const Point p{0.013, -0.007};
  const auto u = on_square(41, 1.0, [&](const Point& z) { return -std::log(distance(z, p, 2)); });
  const auto rep = submean_defect(u, DefectOptions{DefectMode::subharmonic, StencilKind::grid_ring, 0.0, 1e-9});
  EXPECT_GT(rep.worst, 0.0);
  EXPECT_GT(rep.above_tolerance, 0u);
  // log|z - p| is harmonic: away from the pole the five-point defect is a
  // small truncation term of either sign
  std::vector<bool> far(u.size(), false);
  for (std::size_t i = 0; i < u.size(); ++i) far[i] = distance(u.spec().point(i), p, 2) > 0.3;
  auto v = u.values();
  for (double& x : v) x = -x;
  DefectOptions opt;
  opt.restrict_to = &far;
  const auto pos = submean_defect(u.with_values(v), opt);
  EXPECT_LE(std::abs(pos.worst), 1e-3);
}

TEST(SubmeanDefect, DirectionalModeOnPlurisubharmonicFunctions) {
  const auto g = make_grid({-1, -1, -1, -1}, {1, 1, 1, 1}, 9);
  // |z1 + z2|^2 is psh; Re(z1 conj z2) has an indefinite Levi form.
  const auto psh = build_field(
      g, [](const Point& x) { return std::pow(x[0] + x[2], 2) + std::pow(x[1] + x[3], 2); }, everywhere);
  const auto indef = build_field(g, [](const Point& x) { return x[0] * x[2] + x[1] * x[3]; }, everywhere);
  DefectOptions opt;
  opt.mode = DefectMode::psh_directional;
  opt.tolerance = 1e-12;
  EXPECT_LE(submean_defect(psh, opt).worst, 1e-12);
  EXPECT_GT(submean_defect(indef, opt).worst, 1e-3);
}

TEST(SubmeanDefect, NoTestableNodesIsAnError) {
  const auto u = on_disc(9, [](const Point&) { return 0.0; });
  DefectOptions opt;
  opt.kind = StencilKind::circle;
  opt.radius = 1.5;
  EXPECT_THROW(submean_defect(u, opt), Error);
}

TEST(Mollify, ConstantStaysConstant) {
  const auto u = on_disc(41, [](const Point&) { return -2.5; });
  const auto m = mollify_interior(u, 0.2);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.in_domain(i)) {
      ++kept;
      EXPECT_NEAR(m[i], -2.5, 1e-13);
    }
  EXPECT_GT(kept, 100u);
  EXPECT_THROW(mollify_interior(u, 0.01), Error);
  EXPECT_THROW(mollify_interior(u, 1.5), Error);
}

TEST(Mollify, SubharmonicIsRaised) {
  const auto u = on_disc(41, [](const Point& z) { return z[0] * z[0] + 3 * z[1] * z[1] + std::exp(z[0]); });
  const auto m = mollify_interior(u, 0.15);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.in_domain(i)) {
      EXPECT_GE(m[i], u[i]);
    }
}

TEST(Mollify, LogPoleMatchesDirectQuadrature) {
  const Point x0{0.0125, 0.0};
  const auto u = on_disc(41, [&](const Point& z) { return std::log(distance(z, x0, 2)); });
  const double sigma = 0.2, h = 0.05;
  const auto m = mollify_interior(u, sigma);
  // nearest node to x0 is the centre (0, 0)
  const std::size_t c = u.spec().flatten(Index{20, 20});
  double num = 0.0, den = 0.0;
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) {
      const double t2 = (i * i + j * j) * h * h;
      if (t2 >= sigma * sigma) continue;
      const double w = std::pow(1.0 - t2 / (sigma * sigma), 3);
      num += w * std::log(std::hypot(i * h - x0[0], j * h - x0[1]));
      den += w;
    }
  EXPECT_TRUE(std::isfinite(m[c]));
  EXPECT_NEAR(m[c], num / den, 1e-12);
}

TEST(Mollify, MonotoneAndCommutesWithConstants) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto u = on_disc(31, [&](const Point&) { return uni(rng); });
  auto v = u.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.5 + uni(rng);
  const auto mu = mollify_interior(u, 0.2);
  const auto mv = mollify_interior(u.with_values(v), 0.2);
  auto shifted = u.values();
  for (double& x : shifted) x += 3.0;
  const auto ms = mollify_interior(u.with_values(shifted), 0.2);
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu.in_domain(i)) {
      EXPECT_LE(mu[i], mv[i]);
      EXPECT_NEAR(ms[i], mu[i] + 3.0, 1e-12);
    }
}

TEST(SupConvolution, ConstantPlusOneOverK) {
  const auto u = on_disc(21, [](const Point&) { return 0.75; });
  for (double k : {1.0, 2.0, 8.0}) {
    const auto phi = sup_convolution(u, k);
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u.in_domain(i)) {
        EXPECT_EQ(phi[i], 0.75 + 1.0 / k);
      }
  }
}

TEST(SupConvolution, LipschitzFixedPoint) {
  const auto u = on_disc(25, [](const Point& z) { return 1.5 * z[0] - 0.5 * std::abs(z[1]); });
  const auto phi = sup_convolution(u, 2.0);
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.in_domain(i)) {
      EXPECT_EQ(phi[i], u[i] + 0.5);
    }
}

TEST(SupConvolution, SingleBumpMatchesTwoCandidateOracle) {
  const auto g = make_grid({-1, -1}, {1, 1}, 21);
  const std::size_t peak = g.flatten(Index{7, 12});
  const auto u = build_field(g, [&](const Point& z) { return z == g.point(peak) ? 0.0 : -1.0; }, everywhere);
  for (double k : {0.5, 2.0, 5.0}) {
    const auto phi = sup_convolution(u, k);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double expect = std::max(-k * distance(g.point(i), g.point(peak), 2), std::max(-1.0, -k)) + 1.0 / k;
      EXPECT_NEAR(phi[i], expect, 1e-14);
    }
  }
}

TEST(SupConvolution, RandomFieldMatchesBruteForceAndIsMonotone) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0.0, 2.0);
  auto u = on_disc(23, [&](const Point&) { return nd(rng); });
  auto vals = u.values();
  vals[u.spec().flatten(Index{11, 11})] = kNegInf;
  u = u.with_values(vals);
  std::vector<double> prev;
  for (double k : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const auto phi = sup_convolution(u, k);
    const auto oracle = brute_sup_conv(u, k);
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!u.in_domain(i)) continue;
      EXPECT_NEAR(phi[i], oracle[i], 1e-12);
      EXPECT_GE(phi[i], u[i]);
      if (!prev.empty()) {
        EXPECT_LE(phi[i], prev[i]);
      }
    }
    prev = phi.values();
  }
}

TEST(SupConvolution, ParallelIsBitIdentical) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const auto u = on_disc(41, [&](const Point&) { return nd(rng); });
  set_thread_count(1);
  const auto a = sup_convolution(u, 3.0);
  set_thread_count(8);
  const auto b = sup_convolution(u, 3.0);
  set_thread_count(1);
  EXPECT_TRUE(a == b);
}

TEST(ConeShift, MonotoneAlongAxisPasses) {
  // cone shifts lower the last coordinate, so a field increasing in it never rises
  const auto u = on_square(33, 1.0, [](const Point& z) { return std::pow(z[1], 3) + z[1]; });
  std::vector<bool> base(u.size(), false);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point z = u.spec().point(i);
    base[i] = std::abs(z[0]) < 0.3 && z[1] > 0.0 && z[1] < 0.5;
  }
  const auto rep = cone_shift_check(u, Cone::lemma(0.4, 1.0, 0.3, 2), ModulusOfContinuity::linear(0.0, 1.0), base);
  EXPECT_LE(rep.defect.worst, 0.0);
}

TEST(ConeShift, OneLipschitzPassesTriangleInequality) {
  const auto u = on_square(33, 1.0, [](const Point& z) { return std::hypot(z[0], z[1]); });
  std::vector<bool> base(u.size(), false);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point z = u.spec().point(i);
    base[i] = std::abs(z[0]) < 0.4 && std::abs(z[1]) < 0.4;
  }
  const auto rep = cone_shift_check(u, Cone::lemma(0.5, 2.0, 0.4, 2), ModulusOfContinuity::linear(1.0, 2.0, 512), base);
  EXPECT_LE(rep.defect.worst, 1e-12);
}

TEST(ConeShift, JumpAlongConeGivesWitness) {
  const auto u = on_square(33, 1.0, [](const Point& z) { return z[1] < -0.2 ? 1.0 : 0.0; });
  std::vector<bool> base(u.size(), false);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point z = u.spec().point(i);
    base[i] = std::abs(z[0]) < 0.2 && z[1] > -0.1 && z[1] < 0.2;
  }
  const auto rep = cone_shift_check(u, Cone::lemma(0.5, 1.0, 0.2, 2), ModulusOfContinuity::linear(0.1, 1.0), base);
  EXPECT_GT(rep.defect.worst, 0.5);
  ASSERT_TRUE(rep.witness.has_value());
  const Point x = u.spec().point(rep.witness->first);
  EXPECT_LT(x[1] + rep.witness->second[1], -0.2);
  // the matching minimal modulus removes the defect
  const auto delta = cone_shift_modulus(u, Cone::lemma(0.5, 1.0, 0.2, 2), base);
  EXPECT_LE(cone_shift_check(u, Cone::lemma(0.5, 1.0, 0.2, 2), delta, base).defect.worst, 0.0);
}

TEST(ConeShift, LeavingDomainIsAnError) {
  const auto u = on_square(17, 1.0, [](const Point&) { return 0.0; });
  std::vector<bool> base(u.size(), true);
  EXPECT_THROW(cone_shift_check(u, Cone::lemma(0.5, 1.0, 0.2, 2), ModulusOfContinuity::linear(1.0, 1.0), base), Error);
}

TEST(Modulus, EmpiricalOfLinearFunction) {
  const auto u = on_square(21, 1.0, [](const Point& z) { return 3.0 * z[0] + 4.0 * z[1]; });
  std::vector<bool> all(u.size(), true);
  const auto w = empirical_modulus(u, all, 0.35);
  // lattice separations only: at t = 0.1 the best pair is one step along the
  // second axis, at t = 0.3 the diagonal (2, 2) step
  EXPECT_NEAR(w(0.1), 0.4, 1e-12);
  EXPECT_NEAR(w(0.3), 1.4, 1e-12);
  for (double t : w.breakpoints()) EXPECT_LE(w(t), 5.0 * t + 1e-12);
  for (std::size_t i = 1; i < w.values().size(); ++i) EXPECT_GE(w.values()[i], w.values()[i - 1]);
  EXPECT_THROW(ModulusOfContinuity({0.1, 0.2}, {1.0, 0.5}), Error);
}
