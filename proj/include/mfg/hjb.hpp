#pragma once

#include <functional>
#include <vector>

#include "mfg/models.hpp"
#include "mfg/operators.hpp"

namespace mfg {

/// Scheme parameters. eps_penalty > 0 adds eps*I diffusion and truncates H at
/// +-1/eps (penalized zero-flux problem on the full domain); shrink_eps > 0
/// instead solves the zero-flux problem on the shrunk mask {d > eps}, with H
/// untouched. Both zero is fine whenever H_p stays bounded on the mask.
struct HJBParams {
  double eps_penalty = 0.0;
  bool cfl_guard = true;
};

/// Backward march for -u_t - div((a+eps I) Du) + bt.Du + H_eps(t,x,Du) = F,
/// u(T) = G, zero co-normal flux on the mask boundary. Implicit diffusion,
/// explicit monotone Hamiltonian: one frozen-coefficient pass per step with
/// upwind directions from Hp at the previous slice's centered gradient.
SpaceTimeField solve_hjb(const DomainSpec& domain, const Discretization& disc,
                         const DiffusionField& a, const HamiltonianModel& model,
                         const SpaceTimeField& F, const Eigen::VectorXd& G,
                         const HJBParams& params);

/// ||G||_inf + T (||F||_inf + h0); the discrete max principle keeps every
/// solve below this bound.
double max_principle_bound(const SpaceTimeField& F, const Eigen::VectorXd& G,
                           const HamiltonianModel& model);

/// Sup over slices and cells (with d > interior_margin) of the largest
/// one-sided gradient magnitude.
double lipschitz_estimate(const SpaceTimeField& u, double interior_margin,
                          const std::vector<double>& cell_dist);

/// Sup over t, x, offsets h of (u(x+h) + u(x-h) - 2u(x)) / |h|^2. Offsets are
/// lattice vectors; both x+h and x-h must be in the mask.
double semiconcavity_estimate(const SpaceTimeField& u,
                              const std::vector<std::array<int, kMaxDim>>& offsets);
std::vector<std::array<int, kMaxDim>> default_offsets(int dim);

enum class ContinuationMode { penalized, shrunk };

struct HJBContinuationEntry {
  double eps;
  SpaceTimeField u;
  double diff;  // L_inf distance to the previous member on the comparison set
};

/// Solves along a decreasing eps sequence and reports consecutive
/// L_inf-on-compact distances; in shrunk mode the comparison set is the
/// coarser member's mask.
std::vector<HJBContinuationEntry> epsilon_continuation(
    const DomainSpec& domain, const DiffusionField& a, const HamiltonianModel& model,
    const std::function<double(double, VecRef)>& F, const std::function<double(VecRef)>& G,
    double h, double T, double dt, const std::vector<double>& eps_sequence, ContinuationMode mode,
    double interior_margin);

}  // namespace mfg
