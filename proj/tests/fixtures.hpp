#pragma once

// Shared problem fixtures used across the unit and acceptance suites.

#include "mfg/mfg.hpp"

namespace fixtures {

using namespace mfg;

/// (0,1) with the boundary-degenerate diffusion a = x(1-x); the canonical
/// viable setting: the SDE drift 1-2x equals tilde_b, so the divergence-form
/// FP drift vanishes.
struct Viable1D {
  DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  DiffusionField a = wright_fisher_diffusion(Vec::Zero(1), Vec::Ones(1));
};

/// Bounded-control model on the viable interval with enough inward push for
/// the invariance inequality (M - R >= 1 covers the a Dd.Dd / d term).
inline HamiltonianModel inward_example1(const DomainSpec& domain, double M = 1.5,
                                        double radius = 0.5) {
  return example1_hamiltonian(M, radius, RunningCost::quadratic_cost(), domain);
}

/// Monotone coupled fixture: Example-1 Hamiltonian, local F(m) = m, G = 0.
inline MFGProblem monotone_problem(double T = 0.5) {
  Viable1D base;
  MFGProblem p;
  p.domain = base.domain;
  p.a = base.a;
  p.model = inward_example1(base.domain);
  p.F = local_linear_coupling_f(1.0, 10.0);
  p.G = zero_coupling_g();
  p.m0 = [](VecRef) { return 1.0; };
  p.T = T;
  return p;
}

inline std::function<double(VecRef)> bump_density(double center = 0.3, double width = 0.2) {
  return [center, width](VecRef x) {
    const double r2 = (x[0] - center) * (x[0] - center) / (width * width);
    return r2 >= 1.0 ? 1e-6 : 1e-6 + (1.0 - r2) * (1.0 - r2);
  };
}

/// Rescales a density to unit discrete mass on the solver mask, so runs with
/// different shapes share the same total mass.
inline std::function<double(VecRef)> unit_mass(const DomainSpec& domain, double h,
                                               std::function<double(VecRef)> f,
                                               double shrink_eps = 0.0) {
  GridMasks gm = grid_masks(domain, h, shrink_eps, shrink_eps + h);
  double mass = 0.0;
  for (int i = 0; i < gm.interior.size(); ++i)
    mass += f(gm.grid.center(gm.interior.cells[i]));
  mass *= gm.grid.cell_volume();
  return [f, mass](VecRef x) { return f(x) / mass; };
}

}  // namespace fixtures
