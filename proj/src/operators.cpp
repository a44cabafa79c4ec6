#include "mfg/operators.hpp"

#include <cmath>

#include "mfg/errors.hpp"
#include "mfg/rng.hpp"

namespace mfg {

Discretization make_discretization(const DomainSpec& domain, double h, double T, double dt,
                                   double shrink_eps) {
  Discretization disc;
  GridMasks gm = grid_masks(domain, h, shrink_eps, shrink_eps + h);
  disc.grid = gm.grid;
  disc.mask = gm.interior;
  disc.dist = mask_distances(domain, disc.grid, disc.mask);
  disc.T = T;
  disc.n_steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  disc.dt = T / disc.n_steps;
  return disc;
}

FaceTopology build_faces(const Grid& grid, const Mask& mask) {
  FaceTopology topo;
  int idx[kMaxDim];
  for (int mi = 0; mi < mask.size(); ++mi) {
    const int cell = mask.cells[mi];
    grid.unravel(cell, idx);
    for (int k = 0; k < grid.dim; ++k) {
      if (idx[k] + 1 >= grid.shape[k]) continue;
      const int mj = mask.index_of[cell + grid.stride(k)];
      if (mj < 0) continue;
      Vec mid = grid.center(cell);
      mid[k] += 0.5 * grid.h;
      topo.faces.push_back({mi, mj, k});
      topo.midpoints.push_back(std::move(mid));
    }
  }
  return topo;
}

SparseMat diffusion_operator(const Grid& grid, const Mask& mask, const FaceTopology& topo,
                             const DiffusionField& a, double eps_penalty) {
  const int n = mask.size();
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * topo.faces.size());
  for (std::size_t f = 0; f < topo.faces.size(); ++f) {
    const auto& face = topo.faces[f];
    const Mat am = a.a(topo.midpoints[f]);
    if (!a.diagonal) {
      // Two-point fluxes cannot represent cross-derivative terms; refuse
      // rather than silently drop them.
      for (int r = 0; r < am.rows(); ++r)
        for (int c = 0; c < am.cols(); ++c)
          if (r != c && std::abs(am(r, c)) > 1e-13)
            fail(Errc::solver_diverged,
                 "finite-volume solvers support diagonal diffusion tensors only");
    }
    const double coeff = (am(face.axis, face.axis) + eps_penalty) * inv_h2;
    if (coeff == 0.0) continue;  // exactly zero flux at a degenerate face
    trip.emplace_back(face.mi, face.mi, coeff);
    trip.emplace_back(face.mj, face.mj, coeff);
    trip.emplace_back(face.mi, face.mj, -coeff);
    trip.emplace_back(face.mj, face.mi, -coeff);
  }
  SparseMat L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

SparseMat fp_advection(const FaceTopology& topo, const std::vector<double>& w, double h, int n) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * topo.faces.size());
  const double inv_h = 1.0 / h;
  for (std::size_t f = 0; f < topo.faces.size(); ++f) {
    const auto& face = topo.faces[f];
    const double wp = std::max(w[f], 0.0) * inv_h;
    const double wm = std::min(w[f], 0.0) * inv_h;
    // donor-cell flux w+ m_i + w- m_j leaving cell i toward cell j
    if (wp != 0.0) {
      trip.emplace_back(face.mi, face.mi, wp);
      trip.emplace_back(face.mj, face.mi, -wp);
    }
    if (wm != 0.0) {
      trip.emplace_back(face.mi, face.mj, wm);
      trip.emplace_back(face.mj, face.mj, -wm);
    }
  }
  SparseMat adv(n, n);
  adv.setFromTriplets(trip.begin(), trip.end());
  return adv;
}

std::vector<double> face_velocities(const FaceTopology& topo, const DriftField& b, double t,
                                    std::uint64_t* fingerprint) {
  std::vector<double> w(topo.faces.size());
  for (std::size_t f = 0; f < topo.faces.size(); ++f) {
    const Vec bf = b.eval(t, topo.midpoints[f]);
    w[f] = -bf[topo.faces[f].axis];
  }
  if (fingerprint && !w.empty())
    *fingerprint = fnv1a(w.data(), w.size() * sizeof(double), *fingerprint);
  return w;
}

}  // namespace mfg
