#pragma once

#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/models.hpp"

namespace mfg {

using SparseMat = Eigen::SparseMatrix<double>;

/// Space-time discretization shared by the HJB and FP solvers: the active
/// mask (full domain or shrunk Omega_eps), cell distances, and the time axis.
struct Discretization {
  Grid grid;
  Mask mask;
  std::vector<double> dist;  // signed distance per mask cell
  double T = 1.0;
  double dt = 0.0;
  int n_steps = 1;
  double time_of(int n) const { return n * dt; }
};

Discretization make_discretization(const DomainSpec& domain, double h, double T, double dt,
                                   double shrink_eps = 0.0);

/// Interior faces of the mask, one record per adjacent cell pair.
struct FaceTopology {
  struct Face {
    int mi, mj;  // mask indices, mj = mi + e_axis neighbor
    int axis;
  };
  std::vector<Face> faces;
  std::vector<Vec> midpoints;
};

FaceTopology build_faces(const Grid& grid, const Mask& mask);

/// Finite-volume operator L = -div((a + eps I) D .) with zero-flux boundary
/// faces. Two-point flux with the axis coefficient a_kk at the face midpoint;
/// requires a diagonal diffusion tensor. Symmetric positive semidefinite,
/// L 1 = 0.
SparseMat diffusion_operator(const Grid& grid, const Mask& mask, const FaceTopology& topo,
                             const DiffusionField& a, double eps_penalty);

/// Donor-cell advection part of the FP generator for face velocities w
/// (physical transport velocity; the divergence-form drift b gives w = -b).
/// Off-diagonals nonpositive, columns sum to zero, so I + dt*(D + Adv) is an
/// M-matrix with unit column sums: positivity and exact mass conservation.
/// Its transpose is the upwind discretization of the dual advection
/// -w . Dphi, which is what makes the discrete adjoint identity exact.
SparseMat fp_advection(const FaceTopology& topo, const std::vector<double>& w, double h, int n);

/// Divergence-form drift field b(t,x) for the FP equation
/// m_t - div(a* Dm) - div(m b) = 0.
struct DriftField {
  std::function<Vec(double, VecRef)> eval;
  bool time_constant = false;
};

/// Face-normal physical velocities w_f = -(b(t, x_f) . e_axis) for one slice,
/// plus a running fingerprint over the sampled values (used to detect that
/// two densities were produced by the same drift).
std::vector<double> face_velocities(const FaceTopology& topo, const DriftField& b, double t,
                                    std::uint64_t* fingerprint);

}  // namespace mfg
