#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "pshlab/counterexample.hpp"
#include "test_oracles.hpp"

using namespace pshlab;

namespace {

const CounterDomain& shared_domain() {
  static const CounterDomain dom = build_counter_domain(66);
  return dom;
}

struct SmallSetup {
  RadialWindow win;
  Candidate naive;
};

const SmallSetup& small_setup() {
  static const SmallSetup s = [] {
    SmallSetup out{build_window(shared_domain(), 4, 0.08, 40), {}};
    out.naive = naive_mollification_candidate(shared_domain(), out.win);
    return out;
  }();
  return s;
}

}  // namespace

TEST(SequenceX, DiagonalEnumeration) {
  const auto xs = build_sequence_x(66);
  ASSERT_EQ(xs.size(), 66u);
  EXPECT_EQ(xs[0].m, 2);
  EXPECT_EQ(xs[0].j, 1);
  EXPECT_NEAR(xs[0].x, 0.5 + std::sqrt(2.0) / 2.0 / 64.0, 1e-15);
  EXPECT_EQ(xs.back().m + xs.back().j, 13);
  for (const auto& a : xs) {
    EXPECT_GT(a.x, 0.0);
    EXPECT_LT(a.x, 1.0);
    EXPECT_GT(distance_to_A(a.x), 0.0);
    EXPECT_GT(a.x, 1.0 / a.m);
  }
  // the atoms with fixed m accumulate at 1/m
  double prev = 1.0;
  for (const auto& a : xs)
    if (a.m == 4) {
      EXPECT_LT(a.x - 0.25, prev);
      prev = a.x - 0.25;
    }
  EXPECT_LT(prev, 1e-7);
  EXPECT_THROW(build_sequence_x(0), Error);
}

TEST(Weights, SupLogDistanceMatchesBruteForce) {
  const auto lam = build_weights(build_sequence_x(20));
  for (const auto& a : lam.atoms()) {
    const long double ref = oracle::brute_sup_log_distance(a.x);
    EXPECT_GE(a.s_upper, static_cast<double>(ref) - 1e-12);
    EXPECT_NEAR(a.s_upper, static_cast<double>(ref), 1e-12 * ref);
  }
}

TEST(Weights, CertifiedSumAndValuesOnA) {
  const auto& lam = shared_domain().potential();
  EXPECT_LE(lam.weighted_sum_upper(), 0.5);
  EXPECT_TRUE(lam.certified_half());
  EXPECT_DOUBLE_EQ(lam.tail_bound(), std::ldexp(1.0, -67));
  std::vector<std::pair<long double, long double>> cx;
  for (const auto& a : lam.atoms()) cx.emplace_back(a.c, a.x);
  for (int m = 1; m <= 30; ++m) {
    const double v = lam(Complex{1.0 / m, 0.0});
    EXPECT_GE(v - lam.tail_bound(), -0.5) << "m = " << m;
    EXPECT_NEAR(v, static_cast<double>(oracle::log_potential(cx, 1.0L / m)), 1e-12);
  }
}

TEST(Weights, SingleTermExample) {
  Atom a;
  a.x = 0.5;
  a.c = 1.0;
  const LogPotential lam({a}, true);
  EXPECT_NEAR(lam(Complex{0.5 + std::exp(-2.0), 0.0}), -2.0, 1e-12);
  EXPECT_EQ(lam(Complex{0.5, 0.0}), -std::numeric_limits<double>::infinity());
}

TEST(Discs, BelowMinusOneAndSeparated) {
  const auto& dom = shared_domain();
  const auto& lam = dom.potential();
  std::size_t representable = 0;
  for (std::size_t k = 0; k < dom.discs().discs.size(); ++k) {
    const auto& d = dom.discs().discs[k];
    EXPECT_LE(d.certified_bound, -1.0);
    EXPECT_LT(d.log_radius, std::log(distance_to_A(d.center) / 2.0) + 1e-12);
    if (d.representable) {
      ++representable;
      ASSERT_TRUE(d.sampled_max.has_value());
      EXPECT_LE(*d.sampled_max, -1.0) << "disc " << k;
      EXPECT_LT(std::exp(d.log_radius), distance_to_A(d.center) / 2.0);
    }
  }
  EXPECT_GE(representable, 3u);
  // the first disc is wide enough to see directly in double precision
  const auto& d0 = dom.discs().discs[0];
  EXPECT_LE(lam(Complex{d0.center + 0.5 * std::exp(d0.log_radius), 0.0}), -1.0);
}

TEST(CounterDomainTest, OrientationAndSeam) {
  const auto& dom = shared_domain();
  EXPECT_GE(dom.u(0.0, Complex{0.25, 0.0}), -0.5);
  EXPECT_EQ(dom.u(0.4, Complex{0.25, 0.0}), -1.0);
  EXPECT_THROW(dom.u(0.25, Complex{0.25, 0.0}), Error);
  EXPECT_THROW(dom.u(0.0, Complex{2.5, 0.0}), Error);
  // on the seam inside a disc both branches are -1
  const auto& d0 = dom.discs().discs[0];
  const Complex zn{d0.center + 0.5 * std::exp(d0.log_radius), 0.0};
  EXPECT_TRUE(dom.contains(std::abs(zn), zn));
  EXPECT_EQ(dom.u(std::abs(zn), zn), -1.0);
  EXPECT_EQ(dom.u(std::abs(zn) * (1.0 - 1e-9), zn), -1.0);
}

TEST(SliceMaxPrinciple, RadialExamples) {
  const std::size_t n = 41;
  const double h = 0.5 / (n - 1);
  std::vector<double> bowl(n), cap(n), flat(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    bowl[i] = (i * h) * (i * h);
    cap[i] = -bowl[i];
  }
  auto r = slice_max_principle(bowl, h, 0.25);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.centre, 0.0);
  EXPECT_TRUE(slice_max_principle(flat, h, -0.75).holds);
  EXPECT_FALSE(slice_max_principle(flat, h, -1.5).holds);
  EXPECT_THROW(slice_max_principle(cap, h, 0.0), Error);
  // log(|z'| + a) is subharmonic; its negative is not
  std::vector<double> lg(n), neg(n);
  for (std::size_t i = 0; i < n; ++i) {
    lg[i] = std::log(i * h + 0.05);
    neg[i] = -lg[i];
  }
  EXPECT_LE(radial_slice_defect(lg, h).worst, 0.0);
  EXPECT_GT(radial_slice_defect(neg, h).worst, 0.0);
}

TEST(Falsify, NaiveMollificationIsRefutedOnFullGrid) {
  const auto& dom = shared_domain();
  const auto t0 = std::chrono::steady_clock::now();
  const auto win = build_window(dom, 4, 0.08, 96);
  const auto cand = naive_mollification_candidate(dom, win);
  const auto wit = falsify(dom, win, cand);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(wit.verdict, Verdict::contradiction) << wit.hypothesis << ": " << wit.detail;
  EXPECT_GE(wit.y.size(), 3u);
  EXPECT_LE(wit.chain_bound, -0.75 + 0.02);
  EXPECT_GE(wit.u_value, -0.5);
  EXPECT_GE(wit.u_lower, -0.5);
  for (double c : wit.centre_values) EXPECT_LE(c, -0.75);
  EXPECT_LT(secs, 120.0);
  RecordProperty("seconds", std::to_string(secs));
}

TEST(Falsify, EachDisabledStepChangesVerdict) {
  const auto& s = small_setup();
  const auto& dom = shared_domain();
  ASSERT_EQ(falsify(dom, s.win, s.naive).verdict, Verdict::contradiction);
  for (int step = 0; step < 5; ++step) {
    ChainSwitches sw;
    bool* flags[] = {&sw.verify, &sw.dini, &sw.max_principle, &sw.continuity, &sw.compare};
    *flags[step] = false;
    EXPECT_EQ(falsify(dom, s.win, s.naive, sw).verdict, Verdict::inconclusive) << "step " << step;
  }
}

TEST(Falsify, CandidatesViolatingHypotheses) {
  const auto& s = small_setup();
  const auto& dom = shared_domain();

  const auto low = falsify(dom, s.win, constant_candidate(s.win, -1.0));
  EXPECT_EQ(low.verdict, Verdict::hypothesis_violated);
  EXPECT_EQ(low.hypothesis, "lower bound");

  Candidate shuffled = s.naive;
  std::swap(shuffled.fields[2], shuffled.fields[5]);
  const auto mono = falsify(dom, s.win, shuffled);
  EXPECT_EQ(mono.verdict, Verdict::hypothesis_violated);
  EXPECT_EQ(mono.hypothesis, "monotonicity");
  EXPECT_EQ(mono.q, 4u);  // v_4 > v_3 = old v_6

  Candidate bump = s.naive;
  bump.slice = [inner = s.naive.slice](std::size_t q, Complex zn) {
    auto f = inner(q, zn);
    f[0] += 0.5;
    return f;
  };
  const auto sub = falsify(dom, s.win, bump);
  EXPECT_EQ(sub.verdict, Verdict::hypothesis_violated);
  EXPECT_EQ(sub.hypothesis, "slice subharmonicity");

  // stays above -3/4 on the ring for every q
  const auto high = falsify(dom, s.win, constant_candidate(s.win, 0.0));
  EXPECT_EQ(high.verdict, Verdict::inconclusive);
  EXPECT_EQ(high.hypothesis, "dini");
}

TEST(Falsify, RejectsWindowsWithFewAtoms) {
  const auto dom = build_counter_domain(10);
  const auto win = build_window(dom, 4, 0.08, 16);
  const auto cand = constant_candidate(win, 0.0);
  EXPECT_THROW(falsify(dom, win, cand), Error);
  EXPECT_THROW(build_window(dom, 4, 0.3, 16), Error);
  EXPECT_THROW(build_window(dom, 1, 0.1, 16), Error);
}

TEST(Falsify, ThreadCountDoesNotChangeTheWitness) {
  const auto& dom = shared_domain();
  set_thread_count(1);
  const auto w1 = build_window(dom, 4, 0.08, 32);
  const auto a = falsify(dom, w1, naive_mollification_candidate(dom, w1));
  set_thread_count(8);
  const auto w8 = build_window(dom, 4, 0.08, 32);
  const auto b = falsify(dom, w8, naive_mollification_candidate(dom, w8));
  set_thread_count(1);
  EXPECT_TRUE(w1.u == w8.u);
  EXPECT_EQ(a.chain_bound, b.chain_bound);
  EXPECT_EQ(a.lipschitz, b.lipschitz);
}
