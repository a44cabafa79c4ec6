#include "mfg/grid.hpp"

#include <cmath>
#include <limits>

#include "mfg/errors.hpp"

namespace mfg {

Grid make_grid(const DomainSpec& domain, double h) {
  Grid g;
  g.dim = domain.dim;
  g.h = h;
  g.lo = domain.box_lo;
  for (int k = 0; k < g.dim; ++k) {
    const double span = domain.box_hi[k] - domain.box_lo[k];
    g.shape[k] = std::max(1, static_cast<int>(std::lround(span / h)));
  }
  return g;
}

GridMasks grid_masks(const DomainSpec& domain, double h, double eps, double delta) {
  GridMasks out;
  out.grid = make_grid(domain, h);
  const int n = out.grid.cell_count();
  out.interior.index_of.assign(n, -1);
  out.layer.index_of.assign(n, -1);
  for (int c = 0; c < n; ++c) {
    const double d = distance_value(domain, out.grid.center(c));
    if (d > eps) {
      out.interior.index_of[c] = static_cast<std::int32_t>(out.interior.cells.size());
      out.interior.cells.push_back(c);
    }
    if (d > 0.0 && d < delta) {
      out.layer.index_of[c] = static_cast<std::int32_t>(out.layer.cells.size());
      out.layer.cells.push_back(c);
    }
  }
  if (out.interior.cells.empty())
    fail(Errc::empty_domain, "no grid cell has distance > eps (h=" + std::to_string(h) +
                                 ", eps=" + std::to_string(eps) + ")");
  return out;
}

SpaceTimeField make_field(const Grid& grid, const Mask& mask, double T, double dt) {
  SpaceTimeField f;
  f.grid = grid;
  f.mask = mask;
  f.n_steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  f.dt = T / f.n_steps;
  f.values = Eigen::MatrixXd::Zero(f.n_steps + 1, mask.size());
  return f;
}

SpaceTimeField sample_field(const Grid& grid, const Mask& mask, double T, double dt,
                            const std::function<double(double, VecRef)>& f) {
  SpaceTimeField out = make_field(grid, mask, T, dt);
  for (int n = 0; n <= out.n_steps; ++n) {
    const double t = out.time_of(n);
    for (int i = 0; i < mask.size(); ++i) out.values(n, i) = f(t, grid.center(mask.cells[i]));
  }
  return out;
}

Eigen::VectorXd sample_on_mask(const Grid& grid, const Mask& mask,
                               const std::function<double(VecRef)>& f) {
  Eigen::VectorXd v(mask.size());
  for (int i = 0; i < mask.size(); ++i) v[i] = f(grid.center(mask.cells[i]));
  return v;
}

namespace {

// Neighbor of mask cell mi along +/- axis, or -1. Guards the grid edge so the
// linear index never wraps across rows.
int mask_neighbor(const Grid& grid, const Mask& mask, int mi, int axis, int dir) {
  const int cell = mask.cells[mi];
  int idx[kMaxDim];
  grid.unravel(cell, idx);
  const int j = idx[axis] + dir;
  if (j < 0 || j >= grid.shape[axis]) return -1;
  const int ncell = cell + dir * grid.stride(axis);
  return mask.index_of[ncell];
}

}  // namespace

Vec centered_gradient(const Grid& grid, const Mask& mask, const Eigen::VectorXd& slice, int mi) {
  Vec g = Vec::Zero(grid.dim);
  for (int k = 0; k < grid.dim; ++k) {
    const int plus = mask_neighbor(grid, mask, mi, k, +1);
    const int minus = mask_neighbor(grid, mask, mi, k, -1);
    if (plus >= 0 && minus >= 0)
      g[k] = (slice[plus] - slice[minus]) / (2.0 * grid.h);
    else if (plus >= 0)
      g[k] = (slice[plus] - slice[mi]) / grid.h;
    else if (minus >= 0)
      g[k] = (slice[mi] - slice[minus]) / grid.h;
  }
  return g;
}

double one_sided_diff(const Grid& grid, const Mask& mask, const Eigen::VectorXd& slice, int mi,
                      int axis, bool forward) {
  const int nb = mask_neighbor(grid, mask, mi, axis, forward ? +1 : -1);
  if (nb < 0) return 0.0;
  return forward ? (slice[nb] - slice[mi]) / grid.h : (slice[mi] - slice[nb]) / grid.h;
}

Vec upwind_gradient(const Grid& grid, const Mask& mask, const Eigen::VectorXd& slice, int mi,
                    VecRef w) {
  Vec g = Vec::Zero(grid.dim);
  for (int k = 0; k < grid.dim; ++k) {
    if (w[k] > 0.0)
      g[k] = one_sided_diff(grid, mask, slice, mi, k, /*forward=*/false);
    else if (w[k] < 0.0)
      g[k] = one_sided_diff(grid, mask, slice, mi, k, /*forward=*/true);
  }
  return g;
}

std::vector<double> mask_distances(const DomainSpec& domain, const Grid& grid, const Mask& mask) {
  std::vector<double> d(mask.size());
  for (int i = 0; i < mask.size(); ++i) d[i] = distance_value(domain, grid.center(mask.cells[i]));
  return d;
}

GradientSampler::GradientSampler(const SpaceTimeField& u) : u_(&u) {
  grads_.resize(u.n_slices());
  for (int n = 0; n < u.n_slices(); ++n) {
    grads_[n].resize(u.mask.size(), u.grid.dim);
    const Eigen::VectorXd slice = u.values.row(n).transpose();
    for (int i = 0; i < u.mask.size(); ++i)
      grads_[n].row(i) = centered_gradient(u.grid, u.mask, slice, i).transpose();
  }
}

void GradientSampler::gradient_at(double t, const double* x, double* out) const {
  const Grid& grid = u_->grid;
  const Mask& mask = u_->mask;
  const int dim = grid.dim;
  int n = static_cast<int>(std::floor((t - u_->t0) / u_->dt));
  n = std::max(0, std::min(n, u_->n_steps));
  const Eigen::MatrixXd& g = grads_[n];

  // cell-center coordinates: x maps to base index + fraction per axis
  int base[kMaxDim];
  double frac[kMaxDim];
  bool clamped = false;
  for (int k = 0; k < dim; ++k) {
    const double u_coord = (x[k] - grid.lo[k]) / grid.h - 0.5;
    double b = std::floor(u_coord);
    double fr = u_coord - b;
    if (b < 0) {
      b = 0;
      fr = 0.0;
      clamped = true;
    }
    if (b > grid.shape[k] - 2) {
      b = std::max(0, grid.shape[k] - 2);
      fr = grid.shape[k] >= 2 ? 1.0 : 0.0;
      clamped = true;
    }
    base[k] = static_cast<int>(b);
    frac[k] = fr;
  }

  for (int k = 0; k < dim; ++k) out[k] = 0.0;
  double wsum = 0.0;
  const int corners = 1 << dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    int cell = 0;
    for (int k = 0; k < dim; ++k) {
      const int off = (c >> k) & 1;
      w *= off ? frac[k] : 1.0 - frac[k];
      cell += (base[k] + off) * grid.stride(k);
    }
    if (w == 0.0) continue;
    const int mi = mask.index_of[cell];
    if (mi < 0) continue;
    wsum += w;
    for (int k = 0; k < dim; ++k) out[k] += w * g(mi, k);
  }
  if (wsum > 0.0) {
    for (int k = 0; k < dim; ++k) out[k] /= wsum;
  } else {
    // no masked corner: fall back to the nearest masked cell
    clamped = true;
    double best = std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i < mask.size(); ++i) {
      const Vec ci = grid.center(mask.cells[i]);
      double d2 = 0.0;
      for (int k = 0; k < dim; ++k) d2 += (ci[k] - x[k]) * (ci[k] - x[k]);
      if (d2 < best) {
        best = d2;
        best_i = i;
      }
    }
    for (int k = 0; k < dim; ++k) out[k] = g(best_i, k);
  }
  if (clamped) clamp_count_.fetch_add(1, std::memory_order_relaxed);
}

Vec GradientSampler::gradient_at(double t, VecRef x) const {
  Vec out(u_->grid.dim);
  gradient_at(t, x.data(), out.data());
  return out;
}

}  // namespace mfg
