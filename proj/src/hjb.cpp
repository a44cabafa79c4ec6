#include "mfg/hjb.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

SpaceTimeField solve_hjb(const DomainSpec& domain, const Discretization& disc,
                         const DiffusionField& a, const HamiltonianModel& model,
                         const SpaceTimeField& F, const Eigen::VectorXd& G,
                         const HJBParams& params) {
  (void)domain;  // geometry is baked into the discretization
  const Grid& grid = disc.grid;
  const Mask& mask = disc.mask;
  const int cells = mask.size();
  if (F.values.cols() != cells || F.n_steps != disc.n_steps)
    fail(Errc::grid_mismatch, "F field layout does not match the discretization");
  if (G.size() != cells) fail(Errc::grid_mismatch, "terminal data size does not match the mask");

  const HamiltonianModel ham =
      params.eps_penalty > 0.0 ? truncate_hamiltonian(model, params.eps_penalty) : model;

  const FaceTopology topo = build_faces(grid, mask);
  const SparseMat L = diffusion_operator(grid, mask, topo, a, params.eps_penalty);
  SparseMat M(cells, cells);
  M.setIdentity();
  M += disc.dt * L;
  Eigen::SimplicialLDLT<SparseMat> solver(M);
  if (solver.info() != Eigen::Success)
    fail(Errc::solver_diverged, "diffusion factorization failed");

  std::vector<Vec> centers(cells), tilde_b(cells);
  for (int i = 0; i < cells; ++i) {
    centers[i] = grid.center(mask.cells[i]);
    tilde_b[i] = divergence_drift(a, centers[i]);
  }

  SpaceTimeField u = make_field(grid, mask, disc.T, disc.dt);
  u.scheme_info = "hjb: implicit diffusion, explicit upwind Hamiltonian, eps_penalty=" +
                  std::to_string(params.eps_penalty);
  u.values.row(disc.n_steps) = G.transpose();

  Eigen::VectorXd rhs(cells), prev(cells);
  for (int n = disc.n_steps - 1; n >= 0; --n) {
    const double t = disc.time_of(n);
    prev = u.values.row(n + 1).transpose();
    double max_speed = 0.0;
    for (int i = 0; i < cells; ++i) {
      const Vec g0 = centered_gradient(grid, mask, prev, i);
      const Vec w = ham.Hp(t, centers[i], g0);
      const Vec gh = upwind_gradient(grid, mask, prev, i, w);
      const Vec gb = upwind_gradient(grid, mask, prev, i, tilde_b[i]);
      max_speed = std::max(max_speed, w.cwiseAbs().maxCoeff() + tilde_b[i].cwiseAbs().maxCoeff());
      rhs[i] = prev[i] - disc.dt * (ham.H(t, centers[i], gh) + tilde_b[i].dot(gb) - F.values(n, i));
    }
    if (params.cfl_guard && disc.dt * max_speed / grid.h > 1.0)
      fail(Errc::cfl_violation,
           "dt * max(|Hp| + |tilde_b|) / h = " + std::to_string(disc.dt * max_speed / grid.h) +
               " > 1 at t=" + std::to_string(t));
    const Eigen::VectorXd next = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !next.allFinite())
      fail(Errc::solver_diverged, "implicit diffusion solve failed at t=" + std::to_string(t));
    u.values.row(n) = next.transpose();
  }
  return u;
}

double max_principle_bound(const SpaceTimeField& F, const Eigen::VectorXd& G,
                           const HamiltonianModel& model) {
  const double f_sup = F.values.size() ? F.values.cwiseAbs().maxCoeff() : 0.0;
  const double g_sup = G.size() ? G.cwiseAbs().maxCoeff() : 0.0;
  return g_sup + F.horizon() * (f_sup + model.h0_bound);
}

double lipschitz_estimate(const SpaceTimeField& u, double interior_margin,
                          const std::vector<double>& cell_dist) {
  double sup = 0.0;
  for (int n = 0; n <= u.n_steps; ++n) {
    const Eigen::VectorXd slice = u.values.row(n).transpose();
    for (int i = 0; i < u.mask.size(); ++i) {
      if (interior_margin > 0.0 && cell_dist[i] <= interior_margin) continue;
      double norm2 = 0.0;
      for (int k = 0; k < u.grid.dim; ++k) {
        const double fwd = std::abs(one_sided_diff(u.grid, u.mask, slice, i, k, true));
        const double bwd = std::abs(one_sided_diff(u.grid, u.mask, slice, i, k, false));
        const double g = std::max(fwd, bwd);
        norm2 += g * g;
      }
      sup = std::max(sup, std::sqrt(norm2));
    }
  }
  return sup;
}

std::vector<std::array<int, kMaxDim>> default_offsets(int dim) {
  std::vector<std::array<int, kMaxDim>> offs;
  for (int k = 0; k < dim; ++k) {
    std::array<int, kMaxDim> e{0, 0, 0};
    e[k] = 1;
    offs.push_back(e);
  }
  if (dim >= 2) {
    offs.push_back({1, 1, 0});
    offs.push_back({1, -1, 0});
  }
  return offs;
}

double semiconcavity_estimate(const SpaceTimeField& u,
                              const std::vector<std::array<int, kMaxDim>>& offsets) {
  double sup = -std::numeric_limits<double>::infinity();
  const Grid& grid = u.grid;
  const Mask& mask = u.mask;
  int idx[kMaxDim];
  for (const auto& off : offsets) {
    int shift = 0;
    double len2 = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      shift += off[k] * grid.stride(k);
      len2 += static_cast<double>(off[k]) * off[k];
    }
    const double h2 = len2 * grid.h * grid.h;
    for (int i = 0; i < mask.size(); ++i) {
      const int cell = mask.cells[i];
      grid.unravel(cell, idx);
      bool ok = true;
      for (int k = 0; k < grid.dim; ++k) {
        if (idx[k] + off[k] >= grid.shape[k] || idx[k] + off[k] < 0 ||
            idx[k] - off[k] >= grid.shape[k] || idx[k] - off[k] < 0)
          ok = false;
      }
      if (!ok) continue;
      const int ip = mask.index_of[cell + shift];
      const int im = mask.index_of[cell - shift];
      if (ip < 0 || im < 0) continue;
      for (int n = 0; n <= u.n_steps; ++n) {
        const double second = u.values(n, ip) + u.values(n, im) - 2.0 * u.values(n, i);
        sup = std::max(sup, second / h2);
      }
    }
  }
  return std::isfinite(sup) ? sup : 0.0;
}

std::vector<HJBContinuationEntry> epsilon_continuation(
    const DomainSpec& domain, const DiffusionField& a, const HamiltonianModel& model,
    const std::function<double(double, VecRef)>& F, const std::function<double(VecRef)>& G,
    double h, double T, double dt, const std::vector<double>& eps_sequence, ContinuationMode mode,
    double interior_margin) {
  std::vector<HJBContinuationEntry> out;
  for (double eps : eps_sequence) {
    const double shrink = mode == ContinuationMode::shrunk ? eps : 0.0;
    Discretization disc = make_discretization(domain, h, T, dt, shrink);
    HJBParams params;
    params.eps_penalty = mode == ContinuationMode::penalized ? eps : 0.0;
    const SpaceTimeField Ff = sample_field(disc.grid, disc.mask, T, dt, F);
    const Eigen::VectorXd Gv = sample_on_mask(disc.grid, disc.mask, G);
    HJBContinuationEntry entry;
    entry.eps = eps;
    entry.u = solve_hjb(domain, disc, a, model, Ff, Gv, params);
    entry.diff = 0.0;
    if (!out.empty()) {
      // L_inf over cells present in both masks with d > interior_margin
      // (the coarser mask in shrunk mode, by nesting).
      const SpaceTimeField& prev = out.back().u;
      double diff = 0.0;
      const std::vector<double> dist = mask_distances(domain, prev.grid, prev.mask);
      for (int i = 0; i < prev.mask.size(); ++i) {
        if (dist[i] <= interior_margin) continue;
        const int cell = prev.mask.cells[i];
        const int j = entry.u.mask.index_of[cell];
        if (j < 0) continue;
        for (int n = 0; n <= prev.n_steps; ++n)
          diff = std::max(diff, std::abs(prev.values(n, i) - entry.u.values(n, j)));
      }
      entry.diff = diff;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace mfg
