#ifndef PSHLAB_EXPERIMENTS_HPP
#define PSHLAB_EXPERIMENTS_HPP

// Reproducible experiments behind the command-line runner. Each experiment
// maps a resolved flat configuration to report rows plus named artifacts.
// Output bytes depend only on the configuration (thread count excluded).

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pshlab/boundary_approx.hpp"
#include "pshlab/counterexample.hpp"
#include "pshlab/domains.hpp"
#include "pshlab/envelope.hpp"
#include "pshlab/field_grid.hpp"

namespace pshlab {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> cmds{"lipschitz", "cone-fraction", "envelope", "regularize", "lemma-check",
                                             "counterexample", "q2-demo"};
  return cmds;
}

inline std::map<std::string, std::string> default_config(const std::string& command) {
  const std::map<std::string, std::string> cap{{"C", "1"}, {"F.kind", "const"}, {"F.params", "3"}};
  const std::map<std::string, std::string> pipeline{
      {"grid", "256"},      {"ks", "1,2,4,8"},       {"tolerance", "1e-8"},   {"eps0", "0.4"},
      {"min_slope", "100"}, {"seam_tolerance", "1e-6"}};
  const std::map<std::string, std::string> lemma{
      {"lemma.P", "0,2"}, {"lemma.depth", "1"}, {"lemma.slope", "2"}, {"lemma.radius", "0.3"},
      {"lemma.coarse_grid", "128"}, {"lemma.ratio_low", "0.4"}, {"lemma.ratio_high", "0.6"}};
  std::map<std::string, std::string> out{{"seed", "1"}};
  auto merge = [&out](const std::map<std::string, std::string>& m) { out.insert(m.begin(), m.end()); };
  if (command == "lipschitz") {
    merge({{"graphs", "100"}, {"pairs", "20000"}, {"radius", "0.8"}, {"C", "1"}, {"band", "0.05"}});
  } else if (command == "cone-fraction") {
    merge({{"samples", "10000000"}, {"quadrature_tolerance", "1e-6"}, {"sampling_tolerance", "3e-3"}});
  } else if (command == "envelope") {
    merge({{"grid", "256"}, {"tolerance", "1e-10"}, {"obstacle", "wavy"}, {"obstacle.path", ""},
           {"monotone_grid", "65"}, {"pairs", "20"}, {"subsolutions", "50"}, {"method", "howard"}});
  } else if (command == "regularize") {
    merge(cap);
    merge(pipeline);
    merge(lemma);
    merge({{"inputs", "const,quadratic,logpole"}, {"lemma", "true"}});
  } else if (command == "lemma-check") {
    merge(cap);
    merge(pipeline);
    merge(lemma);
    merge({{"inputs", "quadratic"}});
  } else if (command == "counterexample") {
    merge({{"action", "falsify"}, {"atoms", "66"}, {"k", "4"}, {"window", "0.08"}, {"grid", "96"}, {"candidates", "8"},
           {"m_max", "30"}, {"chain_band", "0.02"}});
  } else if (command == "q2-demo") {
    merge({{"rank", "2"}, {"grid", "129"}, {"tolerance", "1e-10"}, {"function", "wave"}});
  } else {
    throw Error(ErrorKind::config, "unknown command '" + command + "'");
  }
  return out;
}

struct ExperimentConfig {
  std::string command;
  std::map<std::string, std::string> values;

  const std::string& text(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw Error(ErrorKind::internal, "configuration lacks key " + key);
    return it->second;
  }
  double number(const std::string& key) const {
    const auto v = parse_list(text(key));
    if (v.size() != 1) throw Error(ErrorKind::config, "key " + key + " expects one number");
    return v[0];
  }
  long integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 1e15) throw Error(ErrorKind::config, "key " + key + " expects an integer");
    return static_cast<long>(v);
  }
  std::size_t count(const std::string& key, long min = 1) const {
    const long v = integer(key);
    if (v < min) throw Error(ErrorKind::config, "key " + key + " must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }
  std::vector<double> numbers(const std::string& key) const { return parse_list(text(key)); }
  std::vector<std::string> names(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(text(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }
  bool flag(const std::string& key) const {
    const auto& v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::config, "key " + key + " expects true or false");
  }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(count("seed", 0)); }

  /// `key = value` lines in key order, preceded by the command.
  std::string resolved_text() const {
    std::string out = "# command = " + command + "\n";
    for (const auto& [k, v] : values) out += k + " = " + v + "\n";
    return out;
  }
};

/// Defaults overlaid with the file text and then with explicit overrides.
/// Unknown keys are errors naming the key.
inline ExperimentConfig resolve_config(const std::string& command, const std::string& file_text,
                                       const std::map<std::string, std::string>& overrides = {}) {
  ExperimentConfig cfg{command, default_config(command)};
  auto apply = [&](const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) {
      if (!cfg.values.count(k)) throw Error(ErrorKind::config, "unknown key '" + k + "' for command " + command);
      cfg.values[k] = v;
    }
  };
  apply(parse_key_values(file_text));
  apply(overrides);
  return cfg;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string experiment;
  std::string metric;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool pass() const { return value >= lower && value <= upper; }
};

struct Report {
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> artifacts;  // file name -> bytes
  std::vector<std::string> lines;                // printed on stdout

  void add(std::string experiment, std::string metric, double value, double lower, double upper) {
    rows.push_back({std::move(experiment), std::move(metric), value, lower, upper});
  }
  void add_at_most(std::string e, std::string m, double v, double up) {
    add(std::move(e), std::move(m), v, -std::numeric_limits<double>::infinity(), up);
  }
  void add_at_least(std::string e, std::string m, double v, double lo) {
    add(std::move(e), std::move(m), v, lo, std::numeric_limits<double>::infinity());
  }
  void add_true(std::string e, std::string m, bool v) { add(std::move(e), std::move(m), v ? 1.0 : 0.0, 1.0, 1.0); }
  void add_info(std::string e, std::string m, double v) {
    add(std::move(e), std::move(m), v, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
  }

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.pass() ? 0 : 1;
    return n;
  }
  bool passed() const { return failures() == 0; }

  std::string csv() const {
    std::string out = "experiment,metric,value,lower,upper,pass\n";
    for (const auto& r : rows)
      out += r.experiment + "," + r.metric + "," + format_number(r.value) + "," + format_number(r.lower) + "," +
             format_number(r.upper) + "," + (r.pass() ? "pass" : "fail") + "\n";
    return out;
  }
};

// ---------------------------------------------------------------------------
// Shared builders

/// Lipschitz graphs with constant C and values in [3C, 4C]: constant,
/// kinked |a| and clamped random-walk polylines, cycled in that order.
inline LipschitzGraph seeded_graph(double C, std::size_t index, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  switch (index % 3) {
    case 0: return LipschitzGraph::constant(C, C * (3.0 + uni(rng)));
    case 1: {
      const double s = C * (2.0 * uni(rng) - 1.0);
      const double lo = 3.0 * C + std::max(0.0, -s), hi = 4.0 * C - std::max(0.0, s);
      return LipschitzGraph::abs(C, lo + (hi - lo) * uni(rng), s);
    }
    default: {
      const std::size_t n = 9;
      const double step = C * 2.0 / (n - 1);
      std::vector<double> v(n);
      v[0] = C * (3.0 + uni(rng));
      for (std::size_t i = 1; i < n; ++i) v[i] = std::clamp(v[i - 1] + step * (2.0 * uni(rng) - 1.0), 3.0 * C, 4.0 * C);
      return LipschitzGraph::pwl(C, v);
    }
  }
}

/// Smooth seeded obstacle on the unit disc.
inline ScalarField wavy_obstacle(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double a = uni(rng), b = uni(rng), c = 2.0 + 3.0 * std::abs(uni(rng));
  return build_field(
      make_grid({-1, -1}, {1, 1}, n),
      [&](const Point& z) { return std::sin(c * z[0] + a) * std::cos(c * z[1] - b) + 0.3 * z[0] * z[1]; },
      [](const Point& z) { return z[0] * z[0] + z[1] * z[1] < 1.0; });
}

/// Fraction of the unit sphere in R^m (m = 2, 3) inside {x_m < -b|x'|}, from a
/// base-2 Halton sequence shifted modulo 1 by a seeded offset. For m = 3 the
/// height z is uniform on the sphere (Archimedes), and membership ignores the
/// azimuth.
inline double sampled_cone_fraction(double b, int m, std::uint64_t samples, std::uint64_t seed) {
  if (m != 2 && m != 3) throw Error(ErrorKind::invalid_argument, "sampled cone fraction supports m = 2, 3");
  if (samples < 1) throw Error(ErrorKind::invalid_argument, "need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double s0 = uni(rng);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 1; i <= samples; ++i) {
    const double u = std::fmod(halton(i, 2) + s0, 1.0);
    if (m == 2) {
      const double th = 2.0 * std::numbers::pi * u;
      hits += std::sin(th) < -b * std::abs(std::cos(th)) ? 1 : 0;
    } else {
      const double z = 2.0 * u - 1.0;  // the azimuth does not affect membership
      hits += z < -b * std::sqrt(std::max(0.0, 1.0 - z * z)) ? 1 : 0;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------
// Experiments

inline Report run_lipschitz(const ExperimentConfig& cfg) {
  Report rep;
  const double C = cfg.number("C");
  const double bound = 20.0 / 3.0 * C;
  const double band = cfg.number("band");
  const std::size_t pairs = cfg.count("pairs", 1000);
  const BallRegion region{1, cfg.number("radius")};
  std::mt19937_64 rng(cfg.seed());
  static const char* kinds[] = {"const", "abs", "pwl"};
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.count("graphs"); ++i) {
    const auto g = seeded_graph(C, i, rng);
    g.validate();
    const double est = lipschitz_estimate([&](const Point& a) { return hat_F(g, a); }, region, pairs, cfg.seed() + i);
    worst = std::max(worst, est);
    rep.add_at_most("lipschitz", "graph_" + std::to_string(i) + "_" + kinds[i % 3], est, bound + band);
  }
  rep.add_at_most("lipschitz", "max_over_graphs", worst, bound + band);
  const auto flat = LipschitzGraph::constant(C, 3.0 * C);
  const double attained = lipschitz_estimate([&](const Point& a) { return hat_F(flat, a); }, region, pairs, cfg.seed());
  rep.add("lipschitz", "flat_3C_attains", attained, bound - band, bound + band);
  return rep;
}

inline Report run_cone_fraction(const ExperimentConfig& cfg) {
  Report rep;
  const double exact2 = cone_solid_angle_fraction(1.0, 2);
  rep.add("cone-fraction", "b1_m2_closed_form", exact2, 0.25 - 1e-12, 0.25 + 1e-12);
  const double ref3 = (1.0 - std::sqrt(2.0) / 2.0) / 2.0;
  const double quad3 = cone_solid_angle_fraction(1.0, 3);
  const double qt = cfg.number("quadrature_tolerance"), st = cfg.number("sampling_tolerance");
  rep.add("cone-fraction", "b1_m3_quadrature", quad3, ref3 - qt, ref3 + qt);
  const auto n = static_cast<std::uint64_t>(cfg.count("samples"));
  const double mc2 = sampled_cone_fraction(1.0, 2, n, cfg.seed());
  const double mc3 = sampled_cone_fraction(1.0, 3, n, cfg.seed() + 1);
  rep.add("cone-fraction", "b1_m2_sampled", mc2, exact2 - st, exact2 + st);
  rep.add("cone-fraction", "b1_m3_sampled", mc3, quad3 - st, quad3 + st);
  return rep;
}

inline Report run_envelope(const ExperimentConfig& cfg) {
  Report rep;
  const double tol = cfg.number("tolerance");
  const std::string method_name = cfg.text("method");
  EnvelopeMethod method = EnvelopeMethod::howard;
  if (method_name == "jacobi") method = EnvelopeMethod::jacobi;
  else if (method_name != "howard") throw Error(ErrorKind::config, "method must be howard or jacobi");
  auto problem = [&](ScalarField f) {
    EnvelopeProblem p;
    p.obstacle = std::move(f);
    p.tolerance = tol;
    p.method = method;
    if (method == EnvelopeMethod::jacobi) p.max_iterations = 1000000;
    return p;
  };

  {  // 3x3: ring pinned to 0, free centre with obstacle 1
    const auto f = build_field(make_grid({-1, -1}, {1, 1}, 3),
                               [](const Point& z) { return z[0] == 0.0 && z[1] == 0.0 ? 1.0 : 0.0; },
                               [](const Point&) { return true; });
    const auto s = solve_envelope(problem(f));
    rep.add("envelope", "hand_3x3_centre_error", std::abs(s.u[4] - 0.0), 0.0, 1e-12);
  }

  ScalarField f;
  const std::string kind = cfg.text("obstacle");
  if (kind == "wavy") {
    f = wavy_obstacle(cfg.count("grid", 3), cfg.seed());
  } else if (kind == "file") {
    f = read_field(cfg.text("obstacle.path"));
  } else {
    throw Error(ErrorKind::config, "obstacle must be wavy or file");
  }
  const auto sol = solve_envelope(problem(f));
  rep.add_true("envelope", "converged", sol.converged);
  rep.add_at_most("envelope", "residual", sol.residual, tol);
  double above = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.in_domain(i)) above = std::max(above, sol.u[i] - f[i]);
  rep.add_at_most("envelope", "max_u_minus_obstacle", above, 0.0);

  const auto again = solve_envelope(problem(sol.u));
  double drift = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.in_domain(i)) drift = std::max(drift, std::abs(again.u[i] - sol.u[i]));
  rep.add_at_most("envelope", "idempotence_drift", drift, tol);

  std::mt19937_64 rng(cfg.seed() * 1000003ULL + 17);
  std::uniform_real_distribution<double> lift(0.0, 0.5);
  double mono = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < cfg.count("pairs"); ++t) {
    const auto a = wavy_obstacle(cfg.count("monotone_grid", 3), cfg.seed() + 100 + t);
    auto bv = a.values();
    for (double& v : bv) v += lift(rng);
    const auto pa = solve_envelope(problem(a));
    const auto pb = solve_envelope(problem(a.with_values(bv)));
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.in_domain(i)) mono = std::max(mono, pa.u[i] - pb.u[i]);
  }
  rep.add_at_most("envelope", "monotonicity_violation", mono, tol);

  std::normal_distribution<double> nd;
  const auto& g = f.spec();
  double excess_worst = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < cfg.count("subsolutions"); ++t) {
    std::array<std::array<double, 3>, 3> planes{};
    for (auto& pl : planes) pl = {nd(rng), nd(rng), nd(rng)};
    std::vector<double> v(f.size(), 0.0);
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.in_domain(i)) continue;
      const Point z = g.point(i);
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& pl : planes) m = std::max(m, pl[0] * z[0] + pl[1] * z[1] + pl[2]);
      v[i] = m;
      shift = std::max(shift, m - f[i]);
    }
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.in_domain(i)) excess_worst = std::max(excess_worst, v[i] - shift - sol.u[i]);
  }
  rep.add_at_most("envelope", "maximality_excess", excess_worst, tol);
  rep.artifacts["envelope.pshf"] = encode_field(sol.u);
  return rep;
}

namespace detail {

inline ScalarField pipeline_input(const std::string& name, const CapDomain& cap, const GridSpec& g) {
  const auto inside = [&](const Point& z) { return cap.contains(z); };
  const double top = cap.graph()(Point{});
  if (name == "const") return build_field(g, [](const Point&) { return 0.0; }, inside);
  if (name == "quadratic") return build_field(g, [](const Point& z) { return z[0] * z[0] + z[1] * z[1] - 10.0; }, inside);
  if (name == "logpole")
    return build_field(g, [top](const Point& z) { return 0.5 * std::log(z[0] * z[0] + (z[1] - top) * (z[1] - top)); }, inside);
  throw Error(ErrorKind::config, "unknown input '" + name + "' (const, quadratic, logpole)");
}

inline RegularizationParams pipeline_params(const ExperimentConfig& cfg) {
  RegularizationParams p;
  p.ks.clear();
  for (double k : cfg.numbers("ks")) {
    if (k != std::floor(k)) throw Error(ErrorKind::config, "ks must be integers");
    p.ks.push_back(static_cast<int>(k));
  }
  p.tolerance = cfg.number("tolerance");
  p.eps0 = cfg.number("eps0");
  p.min_slope = cfg.number("min_slope");
  p.validate();
  return p;
}

inline LemmaOptions lemma_options(const ExperimentConfig& cfg, double tol) {
  const auto P = cfg.numbers("lemma.P");
  if (P.size() != 2) throw Error(ErrorKind::config, "lemma.P needs two coordinates");
  LemmaOptions lo;
  lo.P = Point{P[0], P[1]};
  lo.cone = Cone::lemma(cfg.number("lemma.depth"), cfg.number("lemma.slope"), cfg.number("lemma.radius"), 2);
  lo.tolerance = tol;
  return lo;
}

/// Slack of the continuity certificate at two resolutions; the ratio must
/// fall in the band unless both slacks are already at roundoff.
inline void lemma_rows(Report& rep, const std::string& tag, const LemmaCertificate& fine, const LemmaCertificate& coarse,
                       double low, double high) {
  rep.add_true("lemma", tag + "_accepted_fine", !fine.refused);
  rep.add_true("lemma", tag + "_accepted_coarse", !coarse.refused);
  rep.add_true("lemma", tag + "_holds_fine", fine.holds);
  rep.add_true("lemma", tag + "_holds_coarse", coarse.holds);
  rep.add_info("lemma", tag + "_slack_fine", fine.slack);
  rep.add_info("lemma", tag + "_slack_coarse", coarse.slack);
  constexpr double roundoff = 1e-9;
  if (fine.slack <= roundoff && coarse.slack <= roundoff) {
    rep.add_at_most("lemma", tag + "_slack_at_roundoff", std::max(fine.slack, coarse.slack), roundoff);
  } else {
    rep.add("lemma", tag + "_slack_ratio", coarse.slack > 0.0 ? fine.slack / coarse.slack : kNegInf, low, high);
  }
}

inline CapDomain cap_from_config(const ExperimentConfig& cfg) {
  return CapDomain(graph_from_descriptor(cfg.values, 1), 2);
}

}  // namespace detail

inline Report run_regularize(const ExperimentConfig& cfg, bool pipeline_rows = true, bool with_lemma = true) {
  Report rep;
  const auto cap = detail::cap_from_config(cfg);
  const auto params = detail::pipeline_params(cfg);
  const std::size_t n = cfg.count("grid", 8);
  const auto g = cap.grid(n);
  const double h = g.max_spacing();
  const double seam_tol = cfg.number("seam_tolerance");
  std::string table = "input,k,epsilon,residual,iterations,sup_gap_half_radius,glue_gap,seam_defect,transfer_defect,transfer_bound\n";
  for (const auto& name : cfg.names("inputs")) {
    const auto u = detail::pipeline_input(name, cap, g);
    const auto seq = regularize_boundary(cap, u, params);
    const std::string tag = name;
    if (pipeline_rows) {
      const auto chk = check_sequence(seq);
      rep.add_info("regularize", tag + "_projection_gap", seq.projection_gap);
      rep.add_at_most("regularize", tag + "_increasing_nodes", static_cast<double>(chk.increasing_nodes), 0.0);
      rep.add_at_most("regularize", tag + "_below_input_nodes", static_cast<double>(chk.below_input_nodes), 0.0);
      rep.add_at_most("regularize", tag + "_sandwich_nodes", static_cast<double>(chk.sandwich_nodes), 0.0);
      rep.add_at_most("regularize", tag + "_max_residual", chk.max_residual, params.tolerance);
      rep.add_true("regularize", tag + "_all_converged", chk.all_converged);
      const auto half = detail::ball_mask(seq.certified, Point{0.0, 0.0}, 0.5);
      for (const auto& e : seq.entries) {
        const std::string kt = tag + "_k" + std::to_string(e.k);
        double gap = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
          if (half[i]) gap = std::max(gap, std::abs(e.u_hat[i] - seq.certified[i]));
        const auto gl = gluing_check(e, seq.rho_prime, params.tolerance);
        rep.add_at_most("regularize", kt + "_glue_gap", gl.max_gap, gl.gap_tolerance);
        rep.add_at_most("regularize", kt + "_seam_defect", gl.seam.worst, seam_tol);
        const auto tr = modulus_transfer_check(e, e.cone, transfer_modulus(cap, e));
        const double bound = 2.0 * h * e.k;
        rep.add_at_most("regularize", kt + "_transfer_defect", tr.defect.worst, bound);
        table += name + "," + std::to_string(e.k) + "," + format_number(e.eps) + "," + format_number(e.residual) + "," +
                 std::to_string(e.iterations) + "," + format_number(gap) + "," + format_number(gl.max_gap) + "," +
                 format_number(gl.seam.worst) + "," + format_number(tr.defect.worst) + "," + format_number(bound) + "\n";
      }
    }
    if (with_lemma) {
      const auto lo = detail::lemma_options(cfg, params.tolerance);
      const auto coarse_g = cap.grid(cfg.count("lemma.coarse_grid", 8));
      const auto coarse = regularize_boundary(cap, detail::pipeline_input(name, cap, coarse_g), params);
      const auto cf = lemma_continuity_certificate(seq.entries.back().u_hat, lo);
      const auto cc = lemma_continuity_certificate(coarse.entries.back().u_hat, lo);
      detail::lemma_rows(rep, tag, cf, cc, cfg.number("lemma.ratio_low"), cfg.number("lemma.ratio_high"));
    }
  }
  if (pipeline_rows) rep.artifacts["regularize.csv"] = table;
  return rep;
}

inline Report run_lemma_check(const ExperimentConfig& cfg) { return run_regularize(cfg, false, true); }

inline Report run_counterexample(const ExperimentConfig& cfg) {
  Report rep;
  const std::string action = cfg.text("action");
  if (action != "build" && action != "verify" && action != "falsify")
    throw Error(ErrorKind::config, "action must be build, verify or falsify");
  const auto dom = build_counter_domain(cfg.count("atoms"));
  const auto& lam = dom.potential();

  // certificates are part of every action
  std::string cert = "k,m,j,x,c,s_upper,log_r,representable,disc_sampled_max,disc_certified_bound\n";
  for (std::size_t k = 0; k < lam.size(); ++k) {
    const auto& a = lam.atoms()[k];
    const auto& d = dom.discs().discs[k];
    cert += std::to_string(k + 1) + "," + std::to_string(a.m) + "," + std::to_string(a.j) + "," + format_number(a.x) +
            "," + format_number(a.c) + "," + format_number(a.s_upper) + "," + format_number(d.log_radius) + "," +
            (d.representable ? "1" : "0") + "," + format_number(d.sampled_max.value_or(std::nan(""))) + "," +
            format_number(d.certified_bound) + "\n";
  }
  std::string values = "m,lambda,lambda_minus_tail\n";
  for (std::size_t m = 1; m <= cfg.count("m_max"); ++m) {
    const double v = lam(Complex{1.0 / static_cast<double>(m), 0.0});
    values += std::to_string(m) + "," + format_number(v) + "," + format_number(v - lam.tail_bound()) + "\n";
  }
  rep.artifacts["certificates.csv"] = cert;
  rep.artifacts["lambda_on_A.csv"] = values;
  rep.add_info("counterexample", "atoms", static_cast<double>(lam.size()));

  if (action == "build") {
    std::size_t representable = 0;
    for (const auto& d : dom.discs().discs) representable += d.representable ? 1 : 0;
    rep.add_info("counterexample", "representable_discs", static_cast<double>(representable));
    return rep;
  }

  rep.add_at_most("counterexample", "weighted_sum_upper_plus_tail", lam.weighted_sum_upper() + lam.tail_bound(), 0.5);
  for (std::size_t m = 1; m <= cfg.count("m_max"); ++m)
    rep.add_at_least("counterexample", "lambda_at_1_over_" + std::to_string(m),
                     lam(Complex{1.0 / static_cast<double>(m), 0.0}) - lam.tail_bound(), -0.5);
  for (std::size_t k = 0; k < lam.size(); ++k) {
    const auto& d = dom.discs().discs[k];
    rep.add_at_most("counterexample", "disc_" + std::to_string(k + 1) + "_certified_bound", d.certified_bound, -1.0);
    if (d.sampled_max) rep.add_at_most("counterexample", "disc_" + std::to_string(k + 1) + "_sampled_max", *d.sampled_max, -1.0);
  }
  if (action == "verify") return rep;

  const int k = static_cast<int>(cfg.count("k", 2));
  const auto win = build_window(dom, k, cfg.number("window"), cfg.count("grid", 8));
  const auto cand = naive_mollification_candidate(dom, win, cfg.count("candidates", 6));
  const auto wit = falsify(dom, win, cand);
  rep.add_true("falsify", "naive_contradiction", wit.verdict == Verdict::contradiction);
  rep.add_at_least("falsify", "slices_used", static_cast<double>(wit.y.size()), 3.0);
  rep.add_info("falsify", "q0", static_cast<double>(wit.q0));
  rep.add_info("falsify", "lipschitz_q0", wit.lipschitz);
  rep.add_at_most("falsify", "chain_bound_at_centre", wit.chain_bound, kRingThreshold + cfg.number("chain_band"));
  rep.add_at_least("falsify", "u_at_centre", wit.u_value, -0.5);
  rep.add_at_least("falsify", "u_lower_certified", wit.u_lower, -0.5);
  static const char* steps[] = {"verify", "dini", "max_principle", "continuity", "compare"};
  for (int s = 0; s < 5; ++s) {
    ChainSwitches sw;
    bool* flags[] = {&sw.verify, &sw.dini, &sw.max_principle, &sw.continuity, &sw.compare};
    *flags[s] = false;
    const auto w = falsify(dom, win, cand, sw);
    rep.add_true("falsify", std::string("without_") + steps[s] + "_changes_verdict", w.verdict != wit.verdict);
  }
  {
    const auto w = falsify(dom, win, constant_candidate(win, -1.0, cand.fields.size()));
    rep.add_true("falsify", "constant_minus_one_violates_lower_bound",
                 w.verdict == Verdict::hypothesis_violated && w.hypothesis == "lower bound");
  }
  if (cand.fields.size() >= 6) {
    Candidate shuffled = cand;
    std::swap(shuffled.fields[2], shuffled.fields[5]);
    const auto w = falsify(dom, win, shuffled);
    rep.add_true("falsify", "shuffled_violates_monotonicity",
                 w.verdict == Verdict::hypothesis_violated && w.hypothesis == "monotonicity");
  }
  rep.lines.push_back(std::string("verdict=") + to_string(wit.verdict) + " k=" + std::to_string(wit.k) +
                      " q0=" + std::to_string(wit.q0) + " chain_bound=" + format_number(wit.chain_bound) +
                      " u=" + format_number(wit.u_value) + " slices=" + std::to_string(wit.y.size()));
  std::string chain = "slice,y,centre_value\n";
  for (std::size_t p = 0; p < wit.y.size(); ++p)
    chain += std::to_string(p) + "," + format_number(wit.y[p]) + "," +
             format_number(p < wit.centre_values.size() ? wit.centre_values[p] : std::nan("")) + "\n";
  rep.artifacts["chain.csv"] = chain;
  return rep;
}

/// Envelope of a continuous function on the unit ball, with measured
/// regularity of the result. No pass/fail claim beyond solver accuracy.
inline Report run_q2_demo(const ExperimentConfig& cfg) {
  Report rep;
  const long rank = cfg.integer("rank");
  if (rank != 2 && rank != 4) throw Error(ErrorKind::config, "rank must be 2 or 4");
  const std::size_t n = cfg.count("grid", 3);
  const std::string fn = cfg.text("function");
  std::vector<double> lo(rank, -1.0), hi(rank, 1.0);
  const auto g = make_grid(lo, hi, n);
  auto ball = [rank](const Point& z) { return norm(z, static_cast<int>(rank)) < 1.0; };
  Evaluator f;
  if (fn == "wave") {
    f = [](const Point& z) { return std::cos(3.0 * z[0]) * std::sin(2.0 * z[1] + 0.5) + std::abs(z[0] - z[1]); };
  } else if (fn == "distance") {
    f = [rank](const Point& z) { return -std::abs(norm(z, static_cast<int>(rank)) - 0.5); };
  } else {
    throw Error(ErrorKind::config, "function must be wave or distance");
  }
  const auto obstacle = build_field(g, f, ball);
  EnvelopeProblem p;
  p.obstacle = obstacle;
  p.tolerance = cfg.number("tolerance");
  p.mode = rank == 2 ? DefectMode::subharmonic : DefectMode::psh_directional;
  const auto sol = solve_envelope(p);
  rep.add_true("q2-demo", "converged", sol.converged);
  rep.add_at_most("q2-demo", "residual", sol.residual, p.tolerance);
  double gap = 0.0, slope_inner = 0.0, slope_outer = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!obstacle.in_domain(i)) continue;
    gap = std::max(gap, obstacle[i] - sol.u[i]);
    const bool inner = norm(g.point(i), static_cast<int>(rank)) < 0.5;
    for_each_moore_neighbor(g, i, [&](std::size_t j) {
      if (!obstacle.in_domain(j)) return;
      const double s = std::abs(sol.u[j] - sol.u[i]) / distance(g.point(i), g.point(j), static_cast<int>(rank));
      double& slot = inner ? slope_inner : slope_outer;
      slot = std::max(slot, s);
    });
  }
  rep.add_info("q2-demo", "max_obstacle_minus_envelope", gap);
  rep.add_info("q2-demo", "grid_slope_inner_half", slope_inner);
  rep.add_info("q2-demo", "grid_slope_outer_shell", slope_outer);
  rep.artifacts["q2_envelope.pshf"] = encode_field(sol.u);
  return rep;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
  const auto& c = cfg.command;
  if (c == "lipschitz") return run_lipschitz(cfg);
  if (c == "cone-fraction") return run_cone_fraction(cfg);
  if (c == "envelope") return run_envelope(cfg);
  if (c == "regularize") return run_regularize(cfg, true, cfg.flag("lemma"));
  if (c == "lemma-check") return run_lemma_check(cfg);
  if (c == "counterexample") return run_counterexample(cfg);
  if (c == "q2-demo") return run_q2_demo(cfg);
  throw Error(ErrorKind::config, "unknown command '" + c + "'");
}

}  // namespace pshlab

#endif  // PSHLAB_EXPERIMENTS_HPP
