#include "mfg/geometry.hpp"

#include <cmath>
#include <limits>

#include "mfg/errors.hpp"

namespace mfg {

DistanceEval signed_distance(const DomainSpec& domain, VecRef x) {
  DistanceEval out;
  out.value = std::numeric_limits<double>::infinity();
  out.active_piece = 0;
  for (int i = 0; i < static_cast<int>(domain.pieces.size()); ++i) {
    const double d = domain.pieces[i].distance(x);
    if (d < out.value) {
      out.value = d;
      out.active_piece = i;
    }
  }
  const SmoothPiece& active = domain.pieces[out.active_piece];
  out.grad = active.gradient(x);
  out.hess = active.hessian(x);
  return out;
}

double distance_value(const DomainSpec& domain, VecRef x) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& piece : domain.pieces) d = std::min(d, piece.distance(x));
  return d;
}

double BlendProfile::value(double s) const {
  if (s <= 0.5 * delta) return s;
  if (s >= delta) return 1.0;
  // Quintic Hermite on [delta/2, delta] matching (value, slope, curvature)
  // (delta/2, 1, 0) at the left end and (1, 0, 0) at the right end.
  const double a = 0.5 * delta, b = delta;
  const double w = b - a;
  const double u = (s - a) / w;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  const double h00 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
  const double h10 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
  const double h01 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
  return h00 * a + h10 * w * 1.0 + h01 * 1.0;
}

double BlendProfile::d1(double s) const {
  if (s <= 0.5 * delta) return 1.0;
  if (s >= delta) return 0.0;
  const double a = 0.5 * delta, b = delta;
  const double w = b - a;
  const double u = (s - a) / w;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
  const double dh00 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
  const double dh10 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
  const double dh01 = 30.0 * u2 - 60.0 * u3 + 30.0 * u4;
  return (dh00 * a + dh10 * w + dh01) / w;
}

double BlendProfile::d2(double s) const {
  if (s <= 0.5 * delta || s >= delta) return 0.0;
  const double a = 0.5 * delta, b = delta;
  const double w = b - a;
  const double u = (s - a) / w;
  const double u2 = u * u, u3 = u2 * u;
  const double d2h00 = -60.0 * u + 180.0 * u2 - 120.0 * u3;
  const double d2h10 = -36.0 * u + 96.0 * u2 - 60.0 * u3;
  const double d2h01 = 60.0 * u - 180.0 * u2 + 120.0 * u3;
  return (d2h00 * a + d2h10 * w + d2h01) / (w * w);
}

double BarrierFunction::value(VecRef x) const {
  double v = 1.0;
  for (const auto& piece : domain->pieces) v *= phi.value(piece.distance(x));
  return v;
}

Vec BarrierFunction::gradient(VecRef x) const {
  const int n = static_cast<int>(domain->pieces.size());
  std::vector<double> pv(n);
  for (int i = 0; i < n; ++i) pv[i] = phi.value(domain->pieces[i].distance(x));
  Vec g = Vec::Zero(x.size());
  for (int i = 0; i < n; ++i) {
    double rest = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) rest *= pv[j];
    const double di = domain->pieces[i].distance(x);
    g += rest * phi.d1(di) * domain->pieces[i].gradient(x);
  }
  return g;
}

Mat BarrierFunction::hessian(VecRef x) const {
  const int n = static_cast<int>(domain->pieces.size());
  const int dim = static_cast<int>(x.size());
  std::vector<double> pv(n), p1(n), p2(n), d(n);
  std::vector<Vec> grads(n);
  for (int i = 0; i < n; ++i) {
    d[i] = domain->pieces[i].distance(x);
    pv[i] = phi.value(d[i]);
    p1[i] = phi.d1(d[i]);
    p2[i] = phi.d2(d[i]);
    grads[i] = domain->pieces[i].gradient(x);
  }
  auto prod_except = [&](int i, int k) {
    double r = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i && j != k) r *= pv[j];
    return r;
  };
  Mat h = Mat::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    const double rest = prod_except(i, i);
    h += rest * p1[i] * domain->pieces[i].hessian(x);
    h += rest * p2[i] * (grads[i] * grads[i].transpose());
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      h += prod_except(i, k) * p1[i] * p1[k] * (grads[i] * grads[k].transpose());
    }
  }
  return h;
}

BarrierFunction build_barrier(const DomainSpec& domain, double delta) {
  const double tube = domain.min_tube_width();
  if (delta <= 0.0 || delta > tube)
    fail(Errc::blend_infeasible, "barrier blend width must lie in (0, min tube width]");
  BarrierFunction psi;
  psi.domain = &domain;
  psi.phi.delta = delta;
  // Dense feasibility check of the blend interval: phi' >= 0 and phi >= s.
  const int n_check = 2000;
  for (int i = 0; i <= n_check; ++i) {
    const double s = 0.5 * delta + 0.5 * delta * i / n_check;
    if (psi.phi.d1(s) < -1e-12)
      fail(Errc::blend_infeasible, "blend profile loses monotonicity at s=" + std::to_string(s));
    if (psi.phi.value(s) < s - 1e-12)
      fail(Errc::blend_infeasible, "blend profile drops below identity at s=" + std::to_string(s));
  }
  return psi;
}

TubeCheck tube_check(const DomainSpec& domain, int tangential, int levels, double fd_step) {
  TubeCheck out;
  const double h = fd_step;
  for (const auto& piece : domain.pieces) {
    for (const Vec& y : piece.boundary_sampler(tangential)) {
      for (int lvl = 1; lvl <= levels; ++lvl) {
        const Vec x = y + (piece.tube_width * lvl / (levels + 1)) * piece.gradient(y);
        const Vec g = piece.gradient(x);
        out.worst_eikonal = std::max(out.worst_eikonal, std::abs(g.norm() - 1.0));
        Vec xp = x, xm = x;
        for (int k = 0; k < domain.dim; ++k) {
          xp[k] = x[k] + h;
          xm[k] = x[k] - h;
          const double fd_g = (piece.distance(xp) - piece.distance(xm)) / (2.0 * h);
          out.worst_grad_fd = std::max(out.worst_grad_fd, std::abs(fd_g - g[k]));
          const Vec gp = piece.gradient(xp);
          const Vec gm = piece.gradient(xm);
          const Mat hess = piece.hessian(x);
          for (int r = 0; r < domain.dim; ++r)
            out.worst_hess_fd = std::max(
                out.worst_hess_fd, std::abs((gp[r] - gm[r]) / (2.0 * h) - hess(r, k)));
          xp[k] = x[k];
          xm[k] = x[k];
        }
      }
    }
  }
  out.pass = out.worst_eikonal <= 1e-6 && out.worst_grad_fd <= 10.0 * h * h &&
             out.worst_hess_fd <= 10.0 * h;
  return out;
}

namespace {

SmoothPiece make_slab(int dim, int axis, double origin, double inward_sign, double delta0,
                      const Vec& box_lo, const Vec& box_hi) {
  SmoothPiece piece;
  piece.tube_width = delta0;
  piece.distance = [axis, origin, inward_sign](VecRef x) {
    return inward_sign * (x[axis] - origin);
  };
  piece.gradient = [dim, axis, inward_sign](VecRef) {
    Vec g = Vec::Zero(dim);
    g[axis] = inward_sign;
    return g;
  };
  piece.hessian = [dim](VecRef) { return Mat::Zero(dim, dim); };
  piece.boundary_sampler = [dim, axis, origin, box_lo, box_hi](int n) {
    std::vector<Vec> pts;
    if (dim == 1) {
      Vec p(1);
      p[0] = origin;
      pts.push_back(p);
      return pts;
    }
    // Tensor grid over the remaining axes, inset slightly from the box edge.
    std::vector<int> other;
    for (int k = 0; k < dim; ++k)
      if (k != axis) other.push_back(k);
    std::vector<int> idx(other.size(), 0);
    while (true) {
      Vec p(dim);
      p[axis] = origin;
      for (std::size_t j = 0; j < other.size(); ++j) {
        const int k = other[j];
        const double lo = box_lo[k], hi = box_hi[k];
        p[k] = lo + (hi - lo) * (idx[j] + 0.5) / n;
      }
      pts.push_back(p);
      std::size_t carry = 0;
      while (carry < idx.size() && ++idx[carry] == n) idx[carry++] = 0;
      if (carry == idx.size()) break;
    }
    return pts;
  };
  return piece;
}

}  // namespace

DomainSpec make_interval(double a, double b, double delta0, DomainKind kind) {
  Vec lo(1), hi(1);
  lo[0] = a;
  hi[0] = b;
  return make_box(lo, hi, delta0, kind);
}

DomainSpec make_box(const Vec& lo, const Vec& hi, double delta0, DomainKind kind) {
  DomainSpec d;
  d.dim = static_cast<int>(lo.size());
  d.box_lo = lo;
  d.box_hi = hi;
  d.kind = kind;
  d.box_exact = true;
  for (int k = 0; k < d.dim; ++k) {
    d.pieces.push_back(make_slab(d.dim, k, lo[k], +1.0, delta0, lo, hi));
    d.pieces.push_back(make_slab(d.dim, k, hi[k], -1.0, delta0, lo, hi));
  }
  return d;
}

DomainSpec make_disk(const Vec& center, double radius, double delta0) {
  if (center.size() > 2)
    fail(Errc::config_invalid, "disk domains support one or two dimensions");
  DomainSpec d;
  d.dim = static_cast<int>(center.size());
  d.box_lo = center.array() - radius;
  d.box_hi = center.array() + radius;
  d.kind = DomainKind::smooth;
  SmoothPiece piece;
  piece.tube_width = std::min(delta0, 0.5 * radius);
  const Vec c = center;
  piece.distance = [c, radius](VecRef x) { return radius - (x - c).norm(); };
  piece.gradient = [c](VecRef x) {
    const double r = (x - c).norm();
    if (r < 1e-300) return Vec(Vec::Zero(c.size()));
    return Vec(-(x - c) / r);
  };
  piece.hessian = [c](VecRef x) {
    const int dim = static_cast<int>(c.size());
    const double r = (x - c).norm();
    if (r < 1e-300) return Mat(Mat::Zero(dim, dim));
    const Vec n = (x - c) / r;
    return Mat((-(Mat::Identity(dim, dim) - n * n.transpose()) / r).eval());
  };
  piece.boundary_sampler = [c, radius](int n) {
    std::vector<Vec> pts;
    const int dim = static_cast<int>(c.size());
    if (dim == 1) {
      Vec p(1);
      p[0] = c[0] - radius;
      pts.push_back(p);
      p[0] = c[0] + radius;
      pts.push_back(p);
    } else {
      // 2D circle; higher dimensions are outside the shipped geometry set.
      const int m = std::max(8, n * 4);
      for (int i = 0; i < m; ++i) {
        const double a = 2.0 * M_PI * i / m;
        Vec p = c;
        p[0] += radius * std::cos(a);
        p[1] += radius * std::sin(a);
        pts.push_back(p);
      }
    }
    return pts;
  };
  d.pieces.push_back(std::move(piece));
  return d;
}

}  // namespace mfg
