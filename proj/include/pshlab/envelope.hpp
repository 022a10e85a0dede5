#ifndef PSHLAB_ENVELOPE_HPP
#define PSHLAB_ENVELOPE_HPP

// Largest discrete subsolution below an obstacle:
//   max(u - f, max_groups(u - S_g u)) = 0 on free nodes,  u = f on pinned nodes.
// Pinned nodes are BAND nodes, nodes whose stencil leaves the domain, and any
// caller-supplied extra nodes.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <optional>
#include <vector>

#include "pshlab/subharmonic.hpp"

namespace pshlab {

enum class EnvelopeMethod { howard, jacobi };

struct EnvelopeProblem {
  ScalarField obstacle;
  DefectMode mode = DefectMode::subharmonic;
  double tolerance = 1e-10;
  std::size_t max_iterations = 200;  // policy iterations (howard) or sweeps (jacobi)
  EnvelopeMethod method = EnvelopeMethod::howard;
  std::vector<bool> extra_pinned;  // optional; same size as the grid

  void validate() const {
    if (!(tolerance > 0.0)) throw Error(ErrorKind::invalid_argument, "envelope tolerance must be positive");
    if (!extra_pinned.empty() && extra_pinned.size() != obstacle.size())
      throw Error(ErrorKind::invalid_argument, "pinned mask size does not match the grid");
    for (std::size_t i = 0; i < obstacle.size(); ++i)
      if (obstacle.in_domain(i) && !std::isfinite(obstacle[i]))
        throw Error(ErrorKind::numerical, "obstacle must be finite on the domain (node " + std::to_string(i) + ")");
  }
};

struct EnvelopeSolution {
  ScalarField u;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

struct EnvelopeLayout {
  StencilTable table;
  std::vector<char> free;  // solved for; everything else in the domain is pinned to f
};

inline EnvelopeLayout envelope_layout(const EnvelopeProblem& p) {
  const auto& f = p.obstacle;
  EnvelopeLayout lay{tabulate_stencil(f, make_grid_stencil(f.spec(), p.mode)), std::vector<char>(f.size(), 0)};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const bool pinned = f.tag(i) == NodeTag::band || !lay.table.fits(i) || (!p.extra_pinned.empty() && p.extra_pinned[i]);
    lay.free[i] = f.in_domain(i) && !pinned;
  }
  return lay;
}

inline double group_mean(const std::vector<double>& u, const StencilTable& t, std::size_t i, std::size_t grp) {
  const auto& g = t.stencil.groups[grp];
  const std::size_t base = grp * g.offsets.size();
  double s = 0.0;
  for (std::size_t k = 0; k < g.weights.size(); ++k) s += g.weights[k] * u[t.nodes[i][base + k]];
  return s;
}

inline double residual_on(const std::vector<double>& u, const ScalarField& f, const EnvelopeLayout& lay) {
  double r = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.in_domain(i)) continue;
    r = std::max(r, u[i] - f[i]);
    if (!lay.free[i]) continue;
    for (std::size_t g = 0; g < lay.table.stencil.groups.size(); ++g) r = std::max(r, u[i] - group_mean(u, lay.table, i, g));
  }
  return r;
}

}  // namespace detail

/// max over domain nodes of (u - f)^+ and, on free nodes, the stencil defect.
inline double envelope_residual(const ScalarField& u, const EnvelopeProblem& p) {
  if (!(u.spec() == p.obstacle.spec())) throw Error(ErrorKind::invalid_argument, "field and obstacle grids differ");
  return detail::residual_on(u.values(), p.obstacle, detail::envelope_layout(p));
}

namespace detail {

inline EnvelopeSolution solve_jacobi(const EnvelopeProblem& p, const EnvelopeLayout& lay) {
  const auto& f = p.obstacle;
  std::vector<double> u = f.values(), next = u;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!f.in_domain(i)) u[i] = next[i] = 0.0;
  EnvelopeSolution sol;
  const std::size_t groups = lay.table.stencil.groups.size();
  for (std::size_t it = 1; it <= p.max_iterations; ++it) {
    parallel_for(f.size(), [&](std::size_t i) {
      if (!lay.free[i]) return;
      double m = f[i];
      for (std::size_t g = 0; g < groups; ++g) m = std::min(m, group_mean(u, lay.table, i, g));
      next[i] = m;
    });
    double step = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) step = std::max(step, u[i] - next[i]);
    u.swap(next);
    sol.iterations = it;
    if (step < p.tolerance / 10.0) {
      const double r = residual_on(u, f, lay);
      if (r <= p.tolerance) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.residual = residual_on(u, f, lay);
  sol.u = f.with_values(std::move(u));
  return sol;
}

// Policy: -1 = obstacle (u = f), g >= 0 = stencil group g holds with equality.
inline EnvelopeSolution solve_howard(const EnvelopeProblem& p, const EnvelopeLayout& lay) {
  const auto& f = p.obstacle;
  const std::size_t n = f.size();
  const std::size_t groups = lay.table.stencil.groups.size();
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (f.in_domain(i)) u[i] = f[i];
  std::vector<int> policy(n, -1), next_policy(n, -1);

  auto improve = [&](std::vector<int>& out) {
    parallel_for(n, [&](std::size_t i) {
      if (!lay.free[i]) return;
      // keep the current choice on ties so the iteration cannot cycle
      int best = policy[i];
      double best_val = best < 0 ? u[i] - f[i] : u[i] - group_mean(u, lay.table, i, static_cast<std::size_t>(best));
      const double obst = u[i] - f[i];
      if (obst > best_val) {
        best = -1;
        best_val = obst;
      }
      for (std::size_t g = 0; g < groups; ++g) {
        const double v = u[i] - group_mean(u, lay.table, i, g);
        if (v > best_val) {
          best = static_cast<int>(g);
          best_val = v;
        }
      }
      out[i] = best;
    });
  };

  EnvelopeSolution sol;
  std::vector<long> unknown(n, -1);
  std::vector<double> u_prev = u;
  for (std::size_t it = 1; it <= p.max_iterations; ++it) {
    improve(next_policy);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i)
      if (lay.free[i] && next_policy[i] != policy[i]) changed = true;
    policy.swap(next_policy);
    sol.iterations = it;
    if (!changed) {
      sol.converged = true;
      break;
    }
    // assemble (I - S_policy) u = b over the stencil-policy nodes
    long m = 0;
    for (std::size_t i = 0; i < n; ++i) unknown[i] = (lay.free[i] && policy[i] >= 0) ? m++ : -1;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < n; ++i) {
      if (unknown[i] < 0) continue;
      const long r = unknown[i];
      trip.emplace_back(r, r, 1.0);
      const auto g = static_cast<std::size_t>(policy[i]);
      const auto& grp = lay.table.stencil.groups[g];
      const std::size_t base = g * grp.offsets.size();
      for (std::size_t k = 0; k < grp.weights.size(); ++k) {
        const std::size_t j = lay.table.nodes[i][base + k];
        if (unknown[j] >= 0) {
          trip.emplace_back(r, unknown[j], -grp.weights[k]);
        } else {
          b[r] += grp.weights[k] * f[j];
        }
      }
    }
    if (m > 0) {
      Eigen::SparseMatrix<double> A(m, m);
      A.setFromTriplets(trip.begin(), trip.end());
      Eigen::VectorXd x;
      if (p.mode == DefectMode::subharmonic) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
        if (solver.info() != Eigen::Success) throw Error(ErrorKind::numerical, "envelope system factorization failed");
        x = solver.solve(b);
      } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
        solver.analyzePattern(A);
        solver.factorize(A);
        if (solver.info() != Eigen::Success) throw Error(ErrorKind::numerical, "envelope system factorization failed");
        x = solver.solve(b);
      }
      for (std::size_t i = 0; i < n; ++i)
        if (unknown[i] >= 0) u[i] = x[unknown[i]];
    }
    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (f.in_domain(i) && unknown[i] < 0) u[i] = f[i];
      if (f.in_domain(i)) step = std::max(step, std::abs(u[i] - u_prev[i]));
    }
    // Roundoff ties can flip the policy forever on an already-solved field.
    if (step < p.tolerance / 10.0 && residual_on(u, f, lay) <= p.tolerance) {
      sol.converged = true;
      break;
    }
    u_prev = u;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (f.in_domain(i)) u[i] = std::min(u[i], f[i]);
  sol.residual = residual_on(u, f, lay);
  sol.converged = sol.converged && sol.residual <= p.tolerance;
  sol.u = f.with_values(std::move(u));
  return sol;
}

}  // namespace detail

/// Discrete envelope of the obstacle. A run that hits max_iterations returns
/// a non-converged solution with its residual.
inline EnvelopeSolution solve_envelope(const EnvelopeProblem& p) {
  p.validate();
  const auto lay = detail::envelope_layout(p);
  return p.method == EnvelopeMethod::howard ? detail::solve_howard(p, lay) : detail::solve_jacobi(p, lay);
}

}  // namespace pshlab

#endif  // PSHLAB_ENVELOPE_HPP
