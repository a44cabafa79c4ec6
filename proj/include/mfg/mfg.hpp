#pragma once

#include "mfg/fp.hpp"
#include "mfg/hjb.hpp"
#include "mfg/models.hpp"

namespace mfg {

struct MFGProblem {
  DomainSpec domain;
  DiffusionField a;
  HamiltonianModel model;
  CouplingF F;
  CouplingG G;
  std::function<double(VecRef)> m0;
  double T = 1.0;
};

struct MFGConfig {
  double h = 1.0 / 32;
  double dt = 1.0 / 64;
  double eps_penalty = 0.0;
  double shrink_eps = 0.0;
  double theta = 0.5;  // damping of the Picard update
  double tol = 1e-6;   // sup_t L1 change of m between iterates
  int max_iters = 60;
  bool cfl_guard = true;
  double boundary_delta = 0.1;  // layer width for the boundary diagnostics
  /// Starting profile of the density iteration; the slice at t = 0 is always
  /// pinned to m0. Defaults to m0 held constant in time.
  std::function<double(double, VecRef)> initial_guess;
};

struct MFGDiagnostics {
  double sup_du = 0.0;           // Lipschitz estimate of u
  double semiconcavity = 0.0;    // second-difference upper estimate
  double m_sup = 0.0;
  double boundary_margin = 0.0;  // worst (tilde_b + Hp(Du)).Dd on the layer
};

struct MFGSolution {
  SpaceTimeField u;
  DensityField m;
  Discretization disc;
  int iterations = 0;
  std::vector<double> residual_history;
  double duality_gap = 0.0;  // gap between the final iterate and one more
                             // undamped best-response update
  bool converged = false;
  MFGDiagnostics diagnostics;
};

/// Damped Picard iteration on the density: m held fixed, u = HJB best
/// response, m updated through the FP flow of Hp(t,x,Du) + tilde_b.
/// Non-convergence is reported through the flag, never silently accepted.
MFGSolution solve_mfg(const MFGProblem& problem, const MFGConfig& config);

/// FP drift field of a value function: b(t,x) = Hp(t,x,Du(t,x)) + tilde_b(x)
/// (divergence form). The sampler must outlive the returned field.
DriftField mfg_drift(const GradientSampler& du, const HamiltonianModel& model,
                     const DiffusionField& a);

/// The four monotonicity pairings of the uniqueness identity, each
/// nonnegative when F, G are monotone and H is convex.
struct GapTerms {
  double g_term = 0.0;      // <G(m1(T)) - G(m2(T)), m1(T) - m2(T)>
  double f_term = 0.0;      // space-time <F(m1) - F(m2), m1 - m2>
  double bregman_1 = 0.0;   // <m1, E(Du2, Du1)>
  double bregman_2 = 0.0;   // <m2, E(Du1, Du2)>
  double total() const { return g_term + f_term + bregman_1 + bregman_2; }
};

GapTerms duality_gap(const MFGSolution& sol1, const MFGSolution& sol2, const MFGProblem& problem);

struct MBoundReport {
  double worst_margin = 0.0;  // max (tilde_b + Hp(t,x,Du)).Dd over the layer
  bool condition_holds = false;
  double m_sup = 0.0;
  double m_sup_refined = 0.0;
  double growth_ratio = 0.0;  // refined / coarse
};

/// Checks the boundary drift condition with p = Du at layer cells and
/// measures the stability of ||m||_inf under one h -> h/2 refinement.
MBoundReport m_bound_check(const MFGSolution& sol, const MFGProblem& problem,
                           const MFGConfig& config, double delta);

}  // namespace mfg
