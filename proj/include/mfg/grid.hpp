#pragma once

#include <Eigen/Dense>
#include <array>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "mfg/geometry.hpp"

namespace mfg {

constexpr int kMaxDim = 3;

/// Uniform cell-centered Cartesian grid over a box: cell (i0,i1,..) has
/// center lo + (i+1/2)h per axis.
struct Grid {
  int dim = 1;
  double h = 0.0;
  Vec lo;
  std::array<int, kMaxDim> shape{1, 1, 1};

  int cell_count() const {
    int n = 1;
    for (int k = 0; k < dim; ++k) n *= shape[k];
    return n;
  }
  int stride(int axis) const {
    int s = 1;
    for (int k = 0; k < axis; ++k) s *= shape[k];
    return s;
  }
  void unravel(int linear, int* idx) const {
    for (int k = 0; k < dim; ++k) {
      idx[k] = linear % shape[k];
      linear /= shape[k];
    }
  }
  Vec center(int linear) const {
    Vec x(dim);
    int idx[kMaxDim];
    unravel(linear, idx);
    for (int k = 0; k < dim; ++k) x[k] = lo[k] + (idx[k] + 0.5) * h;
    return x;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= h;
    return v;
  }
};

/// Subset of grid cells with O(1) membership lookup.
struct Mask {
  std::vector<std::int32_t> cells;     // linear indices, ascending
  std::vector<std::int32_t> index_of;  // grid.cell_count() entries, -1 = absent
  int size() const { return static_cast<int>(cells.size()); }
  bool contains(int linear) const { return index_of[linear] >= 0; }
};

Grid make_grid(const DomainSpec& domain, double h);

struct GridMasks {
  Grid grid;
  Mask interior;  // cells with d > eps
  Mask layer;     // cells with 0 < d < delta
};

/// Masks from signed distance at cell centers. Throws EmptyDomain when no
/// cell satisfies d > eps.
GridMasks grid_masks(const DomainSpec& domain, double h, double eps, double delta);

/// Scalar values on (time slice) x (masked cell).
struct SpaceTimeField {
  Grid grid;
  Mask mask;
  double t0 = 0.0;
  double dt = 0.0;
  int n_steps = 0;  // slices = n_steps + 1
  Eigen::MatrixXd values;  // (n_steps+1) x mask.size()
  std::string scheme_info;
  std::uint64_t drift_hash = 0;

  int n_slices() const { return n_steps + 1; }
  double time_of(int slice) const { return t0 + slice * dt; }
  double horizon() const { return t0 + n_steps * dt; }
  Eigen::VectorXd slice(int n) const { return values.row(n).transpose(); }
  bool same_layout(const SpaceTimeField& other) const {
    return grid.dim == other.grid.dim && grid.h == other.grid.h && grid.lo == other.grid.lo &&
           grid.shape == other.grid.shape && mask.cells == other.mask.cells &&
           n_steps == other.n_steps && dt == other.dt;
  }
};

/// Same layout as SpaceTimeField; values are a nonnegative density with
/// cell-volume weighted integrals.
struct DensityField : SpaceTimeField {
  double mass_at(int slice) const { return values.row(slice).sum() * grid.cell_volume(); }
};

SpaceTimeField make_field(const Grid& grid, const Mask& mask, double T, double dt);
SpaceTimeField sample_field(const Grid& grid, const Mask& mask, double T, double dt,
                            const std::function<double(double, VecRef)>& f);
Eigen::VectorXd sample_on_mask(const Grid& grid, const Mask& mask,
                               const std::function<double(VecRef)>& f);

/// Centered gradient of one slice at a mask cell; one-sided at mask edges,
/// zero where no neighbor exists on either side.
Vec centered_gradient(const Grid& grid, const Mask& mask, const Eigen::VectorXd& slice, int mi);

/// One-sided difference toward +axis (forward) or -axis (backward); zero if
/// the neighbor is outside the mask (mirror ghost, matching the zero-flux
/// boundary treatment).
double one_sided_diff(const Grid& grid, const Mask& mask, const Eigen::VectorXd& slice, int mi,
                      int axis, bool forward);

/// Upwind gradient: per axis, backward difference when w[k] > 0, forward
/// when w[k] < 0, zero when w[k] == 0.
Vec upwind_gradient(const Grid& grid, const Mask& mask, const Eigen::VectorXd& slice, int mi,
                    VecRef w);

/// Signed distances of mask cell centers.
std::vector<double> mask_distances(const DomainSpec& domain, const Grid& grid, const Mask& mask);

/// Samples the gradient of a space-time field anywhere: multilinear in space
/// over per-cell centered gradients, piecewise constant in time on [t_n,
/// t_{n+1}). Corners outside the mask are dropped with weight renormalization;
/// points beyond the mask hull are clamped (counted in clamp_count).
class GradientSampler {
 public:
  explicit GradientSampler(const SpaceTimeField& u);
  void gradient_at(double t, const double* x, double* out) const;
  Vec gradient_at(double t, VecRef x) const;
  long clamp_count() const { return clamp_count_.load(); }

 private:
  const SpaceTimeField* u_;
  std::vector<Eigen::MatrixXd> grads_;  // per slice: mask.size() x dim
  mutable std::atomic<long> clamp_count_{0};
};

}  // namespace mfg
