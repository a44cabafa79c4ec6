#include "mfg/fp.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

namespace {

void check_drift_bounded(const FaceTopology& topo, const std::vector<double>& w,
                         double bound, double t) {
  for (std::size_t f = 0; f < w.size(); ++f) {
    if (!std::isfinite(w[f]) || std::abs(w[f]) > bound)
      fail(Errc::drift_unbounded_on_mask,
           "drift sample " + std::to_string(w[f]) + " at face " + std::to_string(f) +
               ", t=" + std::to_string(t) + " exceeds the mask bound");
  }
  (void)topo;
}

}  // namespace

DensityField solve_fp(const DomainSpec& domain, const Discretization& disc,
                      const DiffusionField& a, const DriftField& b, const Eigen::VectorXd& m0,
                      const FPParams& params) {
  (void)domain;  // geometry is baked into the discretization
  const Grid& grid = disc.grid;
  const Mask& mask = disc.mask;
  const int cells = mask.size();
  if (m0.size() != cells) fail(Errc::grid_mismatch, "m0 size does not match the mask");
  if (m0.minCoeff() < 0.0) fail(Errc::negative_density, "initial density has negative entries");
  if (!m0.allFinite()) fail(Errc::negative_density, "initial density has non-finite entries");

  const FaceTopology topo = build_faces(grid, mask);
  const SparseMat D = diffusion_operator(grid, mask, topo, a, params.eps_penalty);
  SparseMat eye(cells, cells);
  eye.setIdentity();

  DensityField m;
  static_cast<SpaceTimeField&>(m) = make_field(grid, mask, disc.T, disc.dt);
  m.scheme_info = "fp: implicit diffusion + donor-cell drift, eps_penalty=" +
                  std::to_string(params.eps_penalty);
  m.values.row(0) = m0.transpose();

  Eigen::SparseLU<SparseMat> solver;
  std::uint64_t fingerprint = 0xcbf29ce484222325ull;
  bool factored = false;
  long clipped = 0;
  for (int n = 0; n < disc.n_steps; ++n) {
    const double t = disc.time_of(n);
    if (!factored || !b.time_constant) {
      const std::vector<double> w = face_velocities(topo, b, t, &fingerprint);
      check_drift_bounded(topo, w, params.drift_bound, t);
      SparseMat M = eye + disc.dt * SparseMat(D + fp_advection(topo, w, grid.h, cells));
      solver.compute(M);
      if (solver.info() != Eigen::Success)
        fail(Errc::solver_diverged, "fp step factorization failed at t=" + std::to_string(t));
      factored = true;
    }
    Eigen::VectorXd next = solver.solve(m.values.row(n).transpose());
    if (solver.info() != Eigen::Success || !next.allFinite())
      fail(Errc::solver_diverged, "fp step solve failed at t=" + std::to_string(t));
    for (int i = 0; i < cells; ++i) {
      if (next[i] < 0.0) {
        if (next[i] < -params.negative_tol)
          fail(Errc::negative_density, "density undershoot " + std::to_string(next[i]) +
                                           " at t=" + std::to_string(t + disc.dt));
        next[i] = 0.0;
        ++clipped;
      }
    }
    m.values.row(n + 1) = next.transpose();
  }
  m.drift_hash = fingerprint;
  if (clipped > 0) m.scheme_info += ", clipped=" + std::to_string(clipped);
  return m;
}

std::vector<double> mass_trace(const DensityField& m) {
  std::vector<double> mass(m.n_slices());
  for (int n = 0; n < m.n_slices(); ++n) mass[n] = m.mass_at(n);
  return mass;
}

std::vector<double> boundary_mass(const DensityField& m, double delta,
                                  const std::vector<double>& cell_dist) {
  std::vector<double> out(m.n_slices(), 0.0);
  const double vol = m.grid.cell_volume();
  for (int n = 0; n < m.n_slices(); ++n) {
    double acc = 0.0;
    for (int i = 0; i < m.mask.size(); ++i)
      if (cell_dist[i] > 0.0 && cell_dist[i] < delta) acc += m.values(n, i);
    out[n] = acc * vol;
  }
  return out;
}

SpaceTimeField solve_fp_dual(const DomainSpec& domain, const Discretization& disc,
                             const DiffusionField& a, const DriftField& b,
                             const Eigen::MatrixXd& source, const FPParams& params) {
  const Grid& grid = disc.grid;
  const Mask& mask = disc.mask;
  const int cells = mask.size();
  if (source.rows() != disc.n_steps || source.cols() != cells)
    fail(Errc::grid_mismatch, "dual source must have one row per step");
  const FaceTopology topo = build_faces(grid, mask);
  const SparseMat D = diffusion_operator(grid, mask, topo, a, params.eps_penalty);
  SparseMat eye(cells, cells);
  eye.setIdentity();

  SpaceTimeField phi = make_field(grid, mask, disc.T, disc.dt);
  phi.scheme_info = "fp-dual: exact transpose of the fp step matrices";
  phi.values.row(disc.n_steps).setZero();

  Eigen::SparseLU<SparseMat> solver;
  bool factored = false;
  for (int n = disc.n_steps - 1; n >= 0; --n) {
    const double t = disc.time_of(n);
    if (!factored || !b.time_constant) {
      const std::vector<double> w = face_velocities(topo, b, t, nullptr);
      check_drift_bounded(topo, w, params.drift_bound, t);
      SparseMat M =
          SparseMat((eye + disc.dt * SparseMat(D + fp_advection(topo, w, grid.h, cells)))
                        .transpose());
      solver.compute(M);
      if (solver.info() != Eigen::Success)
        fail(Errc::solver_diverged, "dual factorization failed at t=" + std::to_string(t));
      factored = true;
    }
    const Eigen::VectorXd rhs =
        phi.values.row(n + 1).transpose() + disc.dt * source.row(n).transpose();
    const Eigen::VectorXd sol = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !sol.allFinite())
      fail(Errc::solver_diverged, "dual solve failed at t=" + std::to_string(t));
    phi.values.row(n) = sol.transpose();
  }
  (void)domain;
  return phi;
}

std::pair<double, double> dual_uniqueness_identity(const DensityField& m1, const DensityField& m2,
                                                   const DomainSpec& domain,
                                                   const Discretization& disc,
                                                   const DiffusionField& a, const DriftField& b,
                                                   const FPParams& params) {
  if (!m1.same_layout(m2)) fail(Errc::grid_mismatch, "densities live on different grids");
  if (m1.mask.cells != disc.mask.cells || m1.n_steps != disc.n_steps)
    fail(Errc::grid_mismatch, "densities do not match the supplied discretization");
  if (m1.drift_hash != m2.drift_hash)
    fail(Errc::drift_mismatch, "densities were produced by different drifts");

  const double vol = m1.grid.cell_volume();
  const int cells = m1.mask.size();
  Eigen::MatrixXd source(disc.n_steps, cells);
  double direct = 0.0;
  for (int n = 0; n < disc.n_steps; ++n) {
    for (int i = 0; i < cells; ++i) {
      const double diff = m1.values(n + 1, i) - m2.values(n + 1, i);
      source(n, i) = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      direct += std::abs(diff);
    }
  }
  direct *= vol * disc.dt;

  const SpaceTimeField phi = solve_fp_dual(domain, disc, a, b, source, params);
  double dual = 0.0;
  for (int i = 0; i < cells; ++i)
    dual += (m1.values(0, i) - m2.values(0, i)) * phi.values(0, i);
  dual *= vol;
  return {direct, dual};
}

std::vector<FPContinuationEntry> epsilon_continuation_fp(
    const DomainSpec& domain, const DiffusionField& a, const DriftField& b,
    const std::function<double(VecRef)>& m0, double h, double T, double dt,
    const std::vector<double>& eps_sequence, const FPParams& params) {
  std::vector<FPContinuationEntry> out;
  for (double eps : eps_sequence) {
    Discretization disc = make_discretization(domain, h, T, dt, eps);
    const Eigen::VectorXd m0v = sample_on_mask(disc.grid, disc.mask, m0);
    FPContinuationEntry entry;
    entry.eps = eps;
    entry.m = solve_fp(domain, disc, a, b, m0v, params);
    entry.diff_sup_l1 = 0.0;
    if (!out.empty()) {
      // zero-extension: cells absent from a mask contribute their full value
      const DensityField& prev = out.back().m;
      const double vol = entry.m.grid.cell_volume();
      double sup = 0.0;
      for (int n = 0; n <= entry.m.n_steps; ++n) {
        double l1 = 0.0;
        for (int j = 0; j < entry.m.mask.size(); ++j) {
          const int cell = entry.m.mask.cells[j];
          const int i = prev.mask.index_of[cell];
          const double pv = i >= 0 ? prev.values(n, i) : 0.0;
          l1 += std::abs(entry.m.values(n, j) - pv);
        }
        for (int i = 0; i < prev.mask.size(); ++i)
          if (entry.m.mask.index_of[prev.mask.cells[i]] < 0) l1 += std::abs(prev.values(n, i));
        sup = std::max(sup, l1 * vol);
      }
      entry.diff_sup_l1 = sup;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace mfg
