#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mfg/operators.hpp"

namespace mfg {

struct FPParams {
  double eps_penalty = 0.0;   // added eps*I diffusion (penalized-on-Omega regime)
  double negative_tol = 1e-12;
  double drift_bound = 1e8;   // refuse masks where sampled |b| exceeds this
};

/// Conservative forward solve of m_t - div((a + eps I)* Dm) - div(m b) = 0,
/// m(0) = m0, with zero total flux through every mask boundary face. Fully
/// implicit step with the donor-cell drift operator: the step matrix is an
/// M-matrix with unit column sums, so mass conservation and nonnegativity
/// hold to linear-solver accuracy. Undershoots beyond negative_tol raise
/// NegativeDensity; smaller ones are clipped and counted in clip metadata.
DensityField solve_fp(const DomainSpec& domain, const Discretization& disc,
                      const DiffusionField& a, const DriftField& b, const Eigen::VectorXd& m0,
                      const FPParams& params);

std::vector<double> mass_trace(const DensityField& m);

/// Per-slice integral of m over the layer {0 < d < delta}.
std::vector<double> boundary_mass(const DensityField& m, double delta,
                                  const std::vector<double>& cell_dist);

/// Backward linear solve of the dual problem
///   -phi_t - div((a+eps I) Dphi) - w . Dphi = f,  phi(T) = 0,
/// using the exact transposes of the FP step matrices (w = -b). The source is
/// given per step: source(n, i) pairs with the density slice n+1.
SpaceTimeField solve_fp_dual(const DomainSpec& domain, const Discretization& disc,
                             const DiffusionField& a, const DriftField& b,
                             const Eigen::MatrixXd& source, const FPParams& params);

/// Direct vs dual value of the L1 mass of m1 - m2 through the sgn-source dual
/// problem; the two agree to solver tolerance because the dual solve uses the
/// exact discrete adjoint. Throws GridMismatch / DriftMismatch.
std::pair<double, double> dual_uniqueness_identity(const DensityField& m1, const DensityField& m2,
                                                   const DomainSpec& domain,
                                                   const Discretization& disc,
                                                   const DiffusionField& a, const DriftField& b,
                                                   const FPParams& params);

struct FPContinuationEntry {
  double eps;
  DensityField m;
  double diff_sup_l1;  // sup_t L1(Omega) distance to the previous member
};

/// Solves on nested shrunk masks {d > eps}, zero-extends to the full grid,
/// and reports sup_t L1 distances between consecutive members.
std::vector<FPContinuationEntry> epsilon_continuation_fp(
    const DomainSpec& domain, const DiffusionField& a, const DriftField& b,
    const std::function<double(VecRef)>& m0, double h, double T, double dt,
    const std::vector<double>& eps_sequence, const FPParams& params);

}  // namespace mfg
