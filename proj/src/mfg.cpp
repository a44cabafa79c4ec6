#include "mfg/mfg.hpp"

#include <cmath>
#include <memory>

#include "mfg/errors.hpp"

namespace mfg {

DriftField mfg_drift(const GradientSampler& du, const HamiltonianModel& model,
                     const DiffusionField& a) {
  DriftField b;
  b.time_constant = false;
  const GradientSampler* sampler = &du;
  b.eval = [sampler, &model, &a](double t, VecRef x) {
    const Vec grad = sampler->gradient_at(t, x);
    return Vec(model.Hp(t, x, grad) + divergence_drift(a, x));
  };
  return b;
}

namespace {

double sup_l1_change(const DensityField& a, const Eigen::MatrixXd& b_values) {
  double sup = 0.0;
  for (int n = 0; n <= a.n_steps; ++n) {
    const double l1 = (a.values.row(n) - b_values.row(n)).cwiseAbs().sum();
    sup = std::max(sup, l1);
  }
  return sup * a.grid.cell_volume();
}

struct IterationState {
  SpaceTimeField u;
  DensityField m_hat;
  std::unique_ptr<GradientSampler> du;
};

// One decoupled best-response update: u from the HJB with couplings frozen at
// m, then the FP flow of the resulting drift.
IterationState best_response(const MFGProblem& problem, const MFGConfig& config,
                             const Discretization& disc, const DensityField& m,
                             const Eigen::VectorXd& m0v) {
  IterationState out;
  const SpaceTimeField F_field = problem.F.evaluate(m);
  const Eigen::VectorXd G_vec = problem.G.evaluate(m);
  HJBParams hjb_params;
  hjb_params.eps_penalty = config.eps_penalty;
  hjb_params.cfl_guard = config.cfl_guard;
  out.u = solve_hjb(problem.domain, disc, problem.a, problem.model, F_field, G_vec, hjb_params);
  out.du = std::make_unique<GradientSampler>(out.u);
  FPParams fp_params;
  fp_params.eps_penalty = config.eps_penalty;
  out.m_hat = solve_fp(problem.domain, disc, problem.a,
                       mfg_drift(*out.du, problem.model, problem.a), m0v, fp_params);
  return out;
}

}  // namespace

MFGSolution solve_mfg(const MFGProblem& problem, const MFGConfig& config) {
  if (config.max_iters < 1) fail(Errc::config_invalid, "max_iters must be at least 1");
  Discretization disc =
      make_discretization(problem.domain, config.h, problem.T, config.dt, config.shrink_eps);
  const Eigen::VectorXd m0v = sample_on_mask(disc.grid, disc.mask, problem.m0);
  if (m0v.minCoeff() < 0.0) fail(Errc::negative_density, "m0 must be nonnegative");

  MFGSolution sol;
  sol.disc = disc;
  static_cast<SpaceTimeField&>(sol.m) = make_field(disc.grid, disc.mask, disc.T, disc.dt);
  if (config.initial_guess) {
    for (int n = 0; n <= disc.n_steps; ++n)
      for (int i = 0; i < disc.mask.size(); ++i)
        sol.m.values(n, i) =
            config.initial_guess(disc.time_of(n), disc.grid.center(disc.mask.cells[i]));
  } else {
    for (int n = 0; n <= disc.n_steps; ++n) sol.m.values.row(n) = m0v.transpose();
  }
  sol.m.values.row(0) = m0v.transpose();  // t = 0 slice is problem data

  IterationState state;
  for (int k = 1; k <= config.max_iters; ++k) {
    state = best_response(problem, config, disc, sol.m, m0v);
    Eigen::MatrixXd blended =
        (1.0 - config.theta) * sol.m.values + config.theta * state.m_hat.values;
    const double residual = sup_l1_change(sol.m, blended);
    sol.m.values.swap(blended);
    sol.m.drift_hash = state.m_hat.drift_hash;
    sol.residual_history.push_back(residual);
    sol.iterations = k;
    if (residual < config.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.u = state.u;

  // Fixed-point duality gap: pair the final iterate with one more undamped
  // best-response update. Zero at an exact equilibrium.
  IterationState next = best_response(problem, config, disc, sol.m, m0v);
  MFGSolution probe;
  probe.u = next.u;
  probe.m = next.m_hat;
  probe.disc = disc;
  sol.duality_gap = duality_gap(sol, probe, problem).total();

  sol.diagnostics.sup_du = lipschitz_estimate(sol.u, 0.0, disc.dist);
  sol.diagnostics.semiconcavity = semiconcavity_estimate(sol.u, default_offsets(disc.grid.dim));
  sol.diagnostics.m_sup = sol.m.values.maxCoeff();
  double margin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < disc.mask.size(); ++i) {
    if (disc.dist[i] >= config.boundary_delta) continue;
    const Vec x = disc.grid.center(disc.mask.cells[i]);
    const DistanceEval de = signed_distance(problem.domain, x);
    const Vec tb = divergence_drift(problem.a, x);
    for (int n = 0; n <= disc.n_steps; ++n) {
      const Eigen::VectorXd slice = sol.u.values.row(n).transpose();
      const Vec du = centered_gradient(disc.grid, disc.mask, slice, i);
      const double v = (tb + problem.model.Hp(disc.time_of(n), x, du)).dot(de.grad);
      margin = std::max(margin, v);
    }
  }
  sol.diagnostics.boundary_margin = std::isfinite(margin) ? margin : 0.0;
  return sol;
}

GapTerms duality_gap(const MFGSolution& sol1, const MFGSolution& sol2, const MFGProblem& problem) {
  if (!sol1.m.same_layout(sol2.m) || !sol1.u.same_layout(sol2.u))
    fail(Errc::grid_mismatch, "duality gap requires identical grids");
  GapTerms terms;
  const Grid& grid = sol1.m.grid;
  const Mask& mask = sol1.m.mask;
  const double vol = grid.cell_volume();
  const double dt = sol1.m.dt;
  const int cells = mask.size();
  const int n_steps = sol1.m.n_steps;

  const Eigen::VectorXd g1 = problem.G.evaluate(sol1.m);
  const Eigen::VectorXd g2 = problem.G.evaluate(sol2.m);
  for (int i = 0; i < cells; ++i)
    terms.g_term +=
        (g1[i] - g2[i]) * (sol1.m.values(n_steps, i) - sol2.m.values(n_steps, i)) * vol;

  const SpaceTimeField f1 = problem.F.evaluate(sol1.m);
  const SpaceTimeField f2 = problem.F.evaluate(sol2.m);
  for (int n = 0; n < n_steps; ++n)
    for (int i = 0; i < cells; ++i)
      terms.f_term += (f1.values(n, i) - f2.values(n, i)) *
                      (sol1.m.values(n, i) - sol2.m.values(n, i)) * vol * dt;

  for (int n = 0; n < n_steps; ++n) {
    const double t = sol1.u.time_of(n);
    const Eigen::VectorXd u1s = sol1.u.values.row(n).transpose();
    const Eigen::VectorXd u2s = sol2.u.values.row(n).transpose();
    for (int i = 0; i < cells; ++i) {
      const Vec x = grid.center(mask.cells[i]);
      const Vec du1 = centered_gradient(grid, mask, u1s, i);
      const Vec du2 = centered_gradient(grid, mask, u2s, i);
      terms.bregman_1 += sol1.m.values(n, i) * bregman_gap(problem.model, t, x, du2, du1) * vol * dt;
      terms.bregman_2 += sol2.m.values(n, i) * bregman_gap(problem.model, t, x, du1, du2) * vol * dt;
    }
  }
  return terms;
}

MBoundReport m_bound_check(const MFGSolution& sol, const MFGProblem& problem,
                           const MFGConfig& config, double delta) {
  MBoundReport report;
  const Discretization& disc = sol.disc;
  double margin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < disc.mask.size(); ++i) {
    if (disc.dist[i] >= delta) continue;
    const Vec x = disc.grid.center(disc.mask.cells[i]);
    const DistanceEval de = signed_distance(problem.domain, x);
    const Vec tb = divergence_drift(problem.a, x);
    for (int n = 0; n <= disc.n_steps; ++n) {
      const Eigen::VectorXd slice = sol.u.values.row(n).transpose();
      const Vec du = centered_gradient(disc.grid, disc.mask, slice, i);
      margin = std::max(margin,
                        (tb + problem.model.Hp(disc.time_of(n), x, du)).dot(de.grad));
    }
  }
  report.worst_margin = std::isfinite(margin) ? margin : 0.0;
  report.condition_holds = report.worst_margin <= 1e-10;
  report.m_sup = sol.m.values.maxCoeff();

  MFGConfig fine = config;
  fine.h = 0.5 * config.h;
  fine.dt = 0.5 * config.dt;
  const MFGSolution refined = solve_mfg(problem, fine);
  report.m_sup_refined = refined.m.values.maxCoeff();
  report.growth_ratio = report.m_sup_refined / std::max(report.m_sup, 1e-300);
  return report;
}

}  // namespace mfg
