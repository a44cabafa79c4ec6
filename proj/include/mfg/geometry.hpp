#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

namespace mfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

/// One C^2 boundary piece: signed distance (positive inside), its gradient
/// and Hessian, valid in a tube of width tube_width around the boundary.
/// Outside the tube the evaluators still return smooth values (the slab and
/// disk formulas are global), they just stop being the true distance.
struct SmoothPiece {
  std::function<double(VecRef)> distance;
  std::function<Vec(VecRef)> gradient;
  std::function<Mat(VecRef)> hessian;
  double tube_width = 0.0;
  /// Sample points on this piece's boundary (used by the invariance layer
  /// sampler); n is a per-direction resolution hint.
  std::function<std::vector<Vec>(int)> boundary_sampler;
};

enum class DomainKind { smooth, generalized };

struct DomainSpec {
  int dim = 1;
  std::vector<SmoothPiece> pieces;
  Vec box_lo, box_hi;  // axis-aligned bounding box of the closure
  DomainKind kind = DomainKind::smooth;
  bool box_exact = false;  // the bounding box IS the domain (interval/box)
  double min_tube_width() const {
    double w = pieces.empty() ? 0.0 : pieces.front().tube_width;
    for (const auto& p : pieces) w = std::min(w, p.tube_width);
    return w;
  }
  /// Allocation-free distance for hot loops (the Monte Carlo stepper).
  double distance_raw(const double* x) const {
    if (box_exact) {
      double d = box_hi[0] - box_lo[0];
      for (int k = 0; k < dim; ++k)
        d = std::min(d, std::min(x[k] - box_lo[k], box_hi[k] - x[k]));
      return d;
    }
    const Eigen::Map<const Eigen::VectorXd> xm(x, dim);
    double d = std::numeric_limits<double>::infinity();
    for (const auto& piece : pieces) d = std::min(d, piece.distance(xm));
    return d;
  }
};

struct DistanceEval {
  double value = 0.0;
  Vec grad;
  Mat hess;
  int active_piece = 0;
};

/// Overall distance as min over pieces; derivatives taken from the active
/// (minimizing) piece, ties broken by lowest index. Negative values flag
/// points outside the domain.
DistanceEval signed_distance(const DomainSpec& domain, VecRef x);

/// Distance value only (no derivative evaluation); fast path for samplers
/// and the SDE stepper.
double distance_value(const DomainSpec& domain, VecRef x);

/// The C^2 blend profile used by the product barrier: identity on
/// [0, delta/2], constant 1 from delta on, quintic Hermite in between.
struct BlendProfile {
  double delta = 0.0;
  double value(double s) const;
  double d1(double s) const;
  double d2(double s) const;
};

/// Product barrier psi(x) = prod_i phi(d_i(x)) for non-smooth (intersection)
/// domains: positive inside, zero on the boundary, equal to the active
/// distance near the boundary away from corners.
struct BarrierFunction {
  const DomainSpec* domain = nullptr;
  BlendProfile phi;
  double value(VecRef x) const;
  Vec gradient(VecRef x) const;
  Mat hessian(VecRef x) const;
};

/// Builds the barrier, verifying by dense sampling that the blend keeps
/// phi(s) >= s and phi' >= 0 on [delta/2, delta]. Throws BlendInfeasible
/// otherwise.
BarrierFunction build_barrier(const DomainSpec& domain, double delta);

/// Sampled validity of the declared tubes: the eikonal property |Dd| = 1 and
/// finite-difference consistency of the supplied gradient/Hessian, checked on
/// layer points inside each piece's tube_width. The tube width itself is
/// user input; this reports when the declaration does not hold.
struct TubeCheck {
  double worst_eikonal = 0.0;  // max | |Dd| - 1 |
  double worst_grad_fd = 0.0;  // max FD mismatch of the gradient
  double worst_hess_fd = 0.0;  // max FD mismatch of the Hessian
  bool pass = false;
};
TubeCheck tube_check(const DomainSpec& domain, int tangential = 8, int levels = 4,
                     double fd_step = 1e-4);

// Domain factories. Rectangles are intersections of one slab per face; each
// slab distance is globally smooth, so only the min-selection is nonsmooth
// (on the medial axis, which no boundary-layer formula touches).
DomainSpec make_interval(double a, double b, double delta0, DomainKind kind = DomainKind::smooth);
DomainSpec make_box(const Vec& lo, const Vec& hi, double delta0, DomainKind kind = DomainKind::smooth);
DomainSpec make_disk(const Vec& center, double radius, double delta0);

}  // namespace mfg
