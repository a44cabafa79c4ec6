#include "mfg/models.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

double DiffusionField::ellipticity(const DomainSpec& domain, double r, int samples_per_axis) const {
  double lambda = std::numeric_limits<double>::infinity();
  const int dim = domain.dim;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec x(dim);
    for (int k = 0; k < dim; ++k) {
      x[k] = domain.box_lo[k] +
             (domain.box_hi[k] - domain.box_lo[k]) * (idx[k] + 0.5) / samples_per_axis;
    }
    if (distance_value(domain, x) >= 1.0 / r) {
      Eigen::SelfAdjointEigenSolver<Mat> es(a(x));
      lambda = std::min(lambda, es.eigenvalues().minCoeff());
    }
    int carry = 0;
    while (carry < dim && ++idx[carry] == samples_per_axis) idx[carry++] = 0;
    if (carry == dim) break;
  }
  return std::isfinite(lambda) ? lambda : 0.0;
}

Vec divergence_drift(const DiffusionField& a, VecRef x) {
  if (a.div_a) return a.div_a(x);
  const int dim = static_cast<int>(x.size());
  const double step = 1e-5;
  Vec out = Vec::Zero(dim);
  Vec xp = x, xm = x;
  for (int i = 0; i < dim; ++i) {
    xp[i] = x[i] + step;
    xm[i] = x[i] - step;
    const Mat ap = a.a(xp);
    const Mat am = a.a(xm);
    for (int j = 0; j < dim; ++j) out[j] += (ap(i, j) - am(i, j)) / (2.0 * step);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return out;
}

DiffusionField constant_diffusion(const Mat& a0) {
  DiffusionField f;
  const Mat a_copy = a0;
  f.a = [a_copy](VecRef) { return a_copy; };
  f.div_a = [n = a0.rows()](VecRef) { return Vec(Vec::Zero(n)); };
  f.lipschitz_const = 0.0;
  f.diagonal = a0.isDiagonal(1e-14);
  Eigen::SelfAdjointEigenSolver<Mat> es(a0);
  if (es.eigenvalues().minCoeff() >= 0.0) {
    const Mat sqrt_a = es.operatorSqrt();
    f.sigma = [sqrt_a](VecRef) { return sqrt_a; };
    f.has_sigma = true;
    if (f.diagonal) {
      const Vec diag = sqrt_a.diagonal();
      f.sigma_diag_raw = [diag](const double*, double* out) {
        for (int k = 0; k < diag.size(); ++k) out[k] = diag[k];
      };
    }
  }
  return f;
}

DiffusionField scaled_identity_diffusion(int dim, double eps) {
  return constant_diffusion(Mat(eps * Mat::Identity(dim, dim)));
}

DiffusionField wright_fisher_diffusion(const Vec& lo, const Vec& hi, double scale) {
  DiffusionField f;
  const int dim = static_cast<int>(lo.size());
  const Vec lo_c = lo, hi_c = hi;
  f.a = [lo_c, hi_c, scale, dim](VecRef x) {
    Mat a = Mat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
      const double w = hi_c[k] - lo_c[k];
      a(k, k) = scale * std::max(0.0, (x[k] - lo_c[k]) * (hi_c[k] - x[k])) / (w * w);
    }
    return a;
  };
  f.sigma = [lo_c, hi_c, scale, dim](VecRef x) {
    Mat s = Mat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
      const double w = hi_c[k] - lo_c[k];
      s(k, k) = std::sqrt(scale * std::max(0.0, (x[k] - lo_c[k]) * (hi_c[k] - x[k]))) / w;
    }
    return s;
  };
  f.sigma_diag_raw = [lo_c, hi_c, scale, dim](const double* x, double* out) {
    for (int k = 0; k < dim; ++k) {
      const double w = hi_c[k] - lo_c[k];
      out[k] = std::sqrt(scale * std::max(0.0, (x[k] - lo_c[k]) * (hi_c[k] - x[k]))) / w;
    }
  };
  f.div_a = [lo_c, hi_c, scale, dim](VecRef x) {
    Vec b(dim);
    for (int k = 0; k < dim; ++k) {
      const double w = hi_c[k] - lo_c[k];
      b[k] = scale * (lo_c[k] + hi_c[k] - 2.0 * x[k]) / (w * w);
    }
    return b;
  };
  f.has_sigma = true;
  f.lipschitz_const = scale;  // |a'| <= scale / w per axis, w >= min width
  f.diagonal = true;
  return f;
}

DiffusionField smooth_degenerate_diffusion(const Vec& lo, const Vec& hi, double scale) {
  DiffusionField f;
  const int dim = static_cast<int>(lo.size());
  const Vec lo_c = lo, hi_c = hi;
  auto sigma_kk = [lo_c, hi_c, scale](VecRef x, int k) {
    const double w = hi_c[k] - lo_c[k];
    return scale * (x[k] - lo_c[k]) * (hi_c[k] - x[k]) / w;
  };
  f.a = [sigma_kk, dim](VecRef x) {
    Mat a = Mat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
      const double s = sigma_kk(x, k);
      a(k, k) = s * s;
    }
    return a;
  };
  f.sigma = [sigma_kk, dim](VecRef x) {
    Mat s = Mat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) s(k, k) = std::abs(sigma_kk(x, k));
    return s;
  };
  f.sigma_diag_raw = [lo_c, hi_c, scale, dim](const double* x, double* out) {
    for (int k = 0; k < dim; ++k) {
      const double w = hi_c[k] - lo_c[k];
      out[k] = std::abs(scale * (x[k] - lo_c[k]) * (hi_c[k] - x[k]) / w);
    }
  };
  f.div_a = [lo_c, hi_c, scale, dim](VecRef x) {
    Vec b(dim);
    for (int k = 0; k < dim; ++k) {
      const double w = hi_c[k] - lo_c[k];
      const double u = (x[k] - lo_c[k]) * (hi_c[k] - x[k]);
      const double du = lo_c[k] + hi_c[k] - 2.0 * x[k];
      b[k] = 2.0 * scale * scale * u * du / (w * w);
    }
    return b;
  };
  f.has_sigma = true;
  f.lipschitz_const = scale * scale;
  f.diagonal = true;
  return f;
}

double bregman_gap(const HamiltonianModel& model, double t, VecRef x, VecRef q, VecRef p) {
  return model.H(t, x, q) - model.H(t, x, p) - model.Hp(t, x, p).dot(q - p);
}

RunningCost RunningCost::quadratic_cost() {
  RunningCost c;
  c.quadratic = true;
  c.L = [](VecRef, VecRef alpha) { return 0.5 * alpha.squaredNorm(); };
  c.dL_dalpha = [](VecRef, VecRef alpha) { return Vec(alpha); };
  return c;
}

namespace {

Vec cost_gradient(const RunningCost& cost, VecRef x, VecRef alpha) {
  if (cost.dL_dalpha) return cost.dL_dalpha(x, alpha);
  const int dim = static_cast<int>(alpha.size());
  const double step = 1e-6;
  Vec g(dim), ap = alpha, am = alpha;
  for (int k = 0; k < dim; ++k) {
    ap[k] = alpha[k] + step;
    am[k] = alpha[k] - step;
    g[k] = (cost.L(x, ap) - cost.L(x, am)) / (2.0 * step);
    ap[k] = alpha[k];
    am[k] = alpha[k];
  }
  return g;
}

void require_convex_cost(const RunningCost& cost, const DomainSpec& domain, double radius) {
  const int dim = domain.dim;
  const double step = 1e-4;
  Vec x = 0.5 * (domain.box_lo + domain.box_hi);
  std::vector<Vec> alphas;
  alphas.push_back(Vec::Zero(dim));
  for (int k = 0; k < dim; ++k) {
    Vec a = Vec::Zero(dim);
    a[k] = 0.5 * radius;
    alphas.push_back(a);
    alphas.push_back(Vec(-a));
  }
  for (const Vec& alpha : alphas) {
    Mat hess(dim, dim);
    Vec ap = alpha, am = alpha;
    for (int i = 0; i < dim; ++i) {
      ap[i] = alpha[i] + step;
      am[i] = alpha[i] - step;
      const Vec gp = cost_gradient(cost, x, ap);
      const Vec gm = cost_gradient(cost, x, am);
      hess.col(i) = (gp - gm) / (2.0 * step);
      ap[i] = alpha[i];
      am[i] = alpha[i];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hess + hess.transpose()));
    if (es.eigenvalues().minCoeff() < -1e-6)
      fail(Errc::non_convex_cost, "running cost has a negative sampled Hessian eigenvalue");
  }
}

// Maximizes -alpha.p - L(x,alpha) over the ball |alpha| <= radius.
Vec maximize_over_ball(const RunningCost& cost, VecRef x, VecRef p, double radius) {
  const int dim = static_cast<int>(p.size());
  if (cost.quadratic) {
    Vec alpha = -p;
    const double r = alpha.norm();
    if (r > radius) alpha *= radius / r;
    return alpha;
  }
  Vec alpha = Vec::Zero(dim);
  double step = 0.5 * std::max(1.0, radius);
  double best = -p.dot(alpha) - cost.L(x, alpha);
  for (int it = 0; it < 50; ++it) {
    const Vec grad = -p - cost_gradient(cost, x, alpha);
    Vec trial = alpha + step * grad;
    const double tn = trial.norm();
    if (tn > radius) trial *= radius / tn;
    const double val = -p.dot(trial) - cost.L(x, trial);
    if (val > best + 1e-16) {
      if ((trial - alpha).norm() < 1e-10) {
        alpha = trial;
        break;
      }
      alpha = trial;
      best = val;
      step *= 1.2;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  return alpha;
}

}  // namespace

HamiltonianModel example1_hamiltonian(double M, double control_radius, const RunningCost& L,
                                      const DomainSpec& domain) {
  require_convex_cost(L, domain, control_radius);
  HamiltonianModel model;
  model.label = "bounded-control";
  model.convex_in_p = true;
  model.growth.kind = GrowthRecord::Kind::bounded;
  model.growth.hp_bound = M + control_radius;
  const DomainSpec dom = domain;
  const RunningCost cost = L;
  Vec x0 = 0.5 * (domain.box_lo + domain.box_hi);
  model.h0_bound = std::abs(-cost.L(x0, Vec::Zero(domain.dim)));
  // H(x,0) = sup(-L) = -min L; for the shipped costs (L >= 0, L(0)=0) this is 0.
  model.H = [dom, cost, M, control_radius](double, VecRef x, VecRef p) {
    const Vec dd = signed_distance(dom, x).grad;
    const Vec alpha = maximize_over_ball(cost, x, p, control_radius);
    return -alpha.dot(p) - M * dd.dot(p) - cost.L(x, alpha);
  };
  model.Hp = [dom, cost, M, control_radius](double, VecRef x, VecRef p) {
    const Vec dd = signed_distance(dom, x).grad;
    const Vec alpha = maximize_over_ball(cost, x, p, control_radius);
    return Vec(-M * dd - alpha);
  };
  return model;
}

HamiltonianModel example2_hamiltonian(double M, double eta, double q, double c0,
                                      const DomainSpec& domain, bool quadratic_guard) {
  if (q <= 1.0) fail(Errc::growth_violation, "coercivity exponent q must exceed 1");
  if (quadratic_guard && q < 2.0)
    fail(Errc::growth_violation, "quadratic growth requires q >= 2 (got q=" + std::to_string(q) + ")");
  (void)c0;  // the coercivity offset does not enter the maximizer for L = eta|alpha|^q
  HamiltonianModel model;
  model.label = "cone-control";
  model.convex_in_p = true;
  const double q_conj = q / (q - 1.0);
  model.growth.kind = GrowthRecord::Kind::power;
  model.growth.q_conj = q_conj;
  model.h0_bound = 0.0;
  const DomainSpec dom = domain;
  // sup over s >= 0 of r s - eta s^q, attained at s* = (r / (eta q))^(1/(q-1));
  // the optimal alpha points along the positive part of c_i = -Dd_i p_i.
  auto maximizer = [eta, q](const Vec& c, double* value) {
    Vec cp = c.cwiseMax(0.0);
    const double r = cp.norm();
    if (r <= 0.0) {
      *value = 0.0;
      return Vec(Vec::Zero(c.size()));
    }
    const double s = std::pow(r / (eta * q), 1.0 / (q - 1.0));
    *value = r * s - eta * std::pow(s, q);
    return Vec((s / r) * cp);
  };
  model.H = [dom, M, maximizer](double, VecRef x, VecRef p) {
    const Vec dd = signed_distance(dom, x).grad;
    const Vec c = -(dd.array() * p.array()).matrix();
    double control_value = 0.0;
    (void)maximizer(c, &control_value);
    return -M * dd.dot(p) + control_value;
  };
  model.Hp = [dom, M, maximizer](double, VecRef x, VecRef p) {
    const Vec dd = signed_distance(dom, x).grad;
    const Vec c = -(dd.array() * p.array()).matrix();
    double control_value = 0.0;
    const Vec alpha = maximizer(c, &control_value);
    return Vec(-M * dd - (dd.array() * alpha.array()).matrix());
  };
  return model;
}

HamiltonianModel quadratic_hamiltonian(int dim, double scale) {
  HamiltonianModel model;
  model.label = "quadratic";
  model.convex_in_p = true;
  model.growth.kind = GrowthRecord::Kind::linear_in_p;
  model.h0_bound = 0.0;
  (void)dim;
  model.H = [scale](double, VecRef, VecRef p) { return 0.5 * scale * p.squaredNorm(); };
  model.Hp = [scale](double, VecRef, VecRef p) { return Vec(scale * p); };
  return model;
}

HamiltonianModel linear_drift_hamiltonian(std::function<Vec(VecRef)> b, double b_bound) {
  HamiltonianModel model;
  model.label = "linear-drift";
  model.convex_in_p = true;
  model.growth.kind = GrowthRecord::Kind::bounded;
  model.growth.hp_bound = b_bound;
  model.h0_bound = 0.0;
  auto drift = std::move(b);
  model.H = [drift](double, VecRef x, VecRef p) { return -drift(x).dot(p); };
  model.Hp = [drift](double, VecRef x, VecRef) { return Vec(-drift(x)); };
  return model;
}

HamiltonianModel zero_hamiltonian(int dim) {
  HamiltonianModel model;
  model.label = "zero";
  model.convex_in_p = true;
  model.growth.kind = GrowthRecord::Kind::bounded;
  model.growth.hp_bound = 0.0;
  model.h0_bound = 0.0;
  model.H = [](double, VecRef, VecRef) { return 0.0; };
  model.Hp = [dim](double, VecRef, VecRef) { return Vec(Vec::Zero(dim)); };
  return model;
}

HamiltonianModel truncate_hamiltonian(const HamiltonianModel& model, double eps) {
  HamiltonianModel out = model;
  out.label = model.label + "-truncated";
  const double level = 1.0 / eps;
  auto H0 = model.H;
  auto Hp0 = model.Hp;
  out.H = [H0, level](double t, VecRef x, VecRef p) {
    return std::min(std::max(H0(t, x, p), -level), level);
  };
  out.Hp = [H0, Hp0, level](double t, VecRef x, VecRef p) {
    const double h = H0(t, x, p);
    if (h > level || h < -level) return Vec(Vec::Zero(p.size()));
    return Hp0(t, x, p);
  };
  out.h0_bound = std::min(model.h0_bound, level);
  return out;
}

StructureSamples default_structure_samples(const DomainSpec& domain, double T, double p_max) {
  StructureSamples s;
  s.t = {0.0, 0.5 * T, T};
  const int dim = domain.dim;
  const int nx = 7;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec x(dim);
    for (int k = 0; k < dim; ++k)
      x[k] = domain.box_lo[k] + (domain.box_hi[k] - domain.box_lo[k]) * (idx[k] + 0.5) / nx;
    if (distance_value(domain, x) > 0.0) s.x.push_back(x);
    int carry = 0;
    while (carry < dim && ++idx[carry] == nx) idx[carry++] = 0;
    if (carry == dim) break;
  }
  for (double mag : {0.0, 0.5, 1.0, 3.0, 10.0, 30.0, p_max}) {
    for (int k = 0; k < dim; ++k) {
      Vec p = Vec::Zero(dim);
      p[k] = mag;
      s.p.push_back(p);
      s.p.push_back(Vec(-p));
    }
    Vec diag = Vec::Constant(dim, mag / std::sqrt(static_cast<double>(dim)));
    s.p.push_back(diag);
  }
  return s;
}

StructureReport check_structure(const HamiltonianModel& model, const DiffusionField& a,
                                const StructureSamples& samples) {
  (void)a;
  StructureReport report;

  StructureCheck h0{"H0", 0.0, model.h0_bound, true, ""};
  for (double t : samples.t)
    for (const Vec& x : samples.x) {
      const Vec zero = Vec::Zero(x.size());
      h0.worst = std::max(h0.worst, std::abs(model.H(t, x, zero)));
    }
  h0.pass = h0.worst <= model.h0_bound + 1e-10;
  report.checks.push_back(h0);

  StructureCheck convex{"convex", 0.0, 1e-10, true, "max midpoint violation"};
  if (model.convex_in_p) {
    for (double t : samples.t)
      for (const Vec& x : samples.x)
        for (std::size_t i = 0; i + 1 < samples.p.size(); i += 2) {
          const Vec& p = samples.p[i];
          const Vec& q = samples.p[i + 1];
          const double viol = model.H(t, x, 0.5 * (p + q)) -
                              0.5 * (model.H(t, x, p) + model.H(t, x, q));
          convex.worst = std::max(convex.worst, viol);
        }
    convex.pass = convex.worst <= 1e-10;
  }
  report.checks.push_back(convex);

  // (linder)/(quadgrow): sampled envelopes of |Hp|/(1+|p|) and |H|/(1+|p|^2);
  // a growing envelope across the top |p| decades flags a violation.
  auto envelope_trend = [&](auto ratio_fn, const char* name, StructureCheck* check) {
    double worst = 0.0, worst_small = 0.0, worst_large = 0.0;
    double p_large = 0.0;
    for (const Vec& p : samples.p) p_large = std::max(p_large, p.norm());
    for (double t : samples.t)
      for (const Vec& x : samples.x)
        for (const Vec& p : samples.p) {
          const double r = ratio_fn(t, x, p);
          worst = std::max(worst, r);
          if (p.norm() <= 0.35 * p_large) worst_small = std::max(worst_small, r);
          else worst_large = std::max(worst_large, r);
        }
    check->condition = name;
    check->worst = worst;
    check->bound = std::max(worst_small, 1e-12);
    check->pass = worst_large <= 2.0 * std::max(worst_small, 1e-12);
    check->detail = "envelope (small-p vs large-p trend)";
  };

  StructureCheck linder;
  envelope_trend(
      [&](double t, const Vec& x, const Vec& p) {
        return model.Hp(t, x, p).norm() / (1.0 + p.norm());
      },
      "linder", &linder);
  report.checks.push_back(linder);

  StructureCheck quadgrow;
  envelope_trend(
      [&](double t, const Vec& x, const Vec& p) {
        return std::abs(model.H(t, x, p)) / (1.0 + p.squaredNorm());
      },
      "quadgrow", &quadgrow);
  report.checks.push_back(quadgrow);

  if (model.hx_lower) {
    StructureCheck hx{"Hx", 0.0, *model.hx_lower, true, "min (Hx.p + C(1+|p|^2))"};
    const double step = 1e-5;
    double worst = std::numeric_limits<double>::infinity();
    for (double t : samples.t)
      for (const Vec& x : samples.x)
        for (const Vec& p : samples.p) {
          Vec hxv(x.size());
          Vec xp = x, xm = x;
          for (int k = 0; k < x.size(); ++k) {
            xp[k] = x[k] + step;
            xm[k] = x[k] - step;
            hxv[k] = (model.H(t, xp, p) - model.H(t, xm, p)) / (2.0 * step);
            xp[k] = x[k];
            xm[k] = x[k];
          }
          worst = std::min(worst, hxv.dot(p) + *model.hx_lower * (1.0 + p.squaredNorm()));
        }
    hx.worst = worst;
    hx.pass = worst >= -1e-8;
    report.checks.push_back(hx);
  }
  return report;
}

SpaceTimeField CouplingF::evaluate(const DensityField& m) const {
  SpaceTimeField out = make_field(m.grid, m.mask, m.n_steps * m.dt, m.dt);
  const int cells = m.mask.size();
  if (mode == Mode::local) {
    for (int n = 0; n <= m.n_steps; ++n) {
      const double t = m.time_of(n);
      for (int i = 0; i < cells; ++i)
        out.values(n, i) = local_f(t, m.grid.center(m.mask.cells[i]), m.values(n, i));
    }
  } else {
    const double vol = m.grid.cell_volume();
    for (int n = 0; n <= m.n_steps; ++n)
      for (int i = 0; i < cells; ++i) {
        const Vec xi = m.grid.center(m.mask.cells[i]);
        double acc = 0.0;
        for (int j = 0; j < cells; ++j)
          acc += kernel(xi, m.grid.center(m.mask.cells[j])) * m.values(n, j);
        out.values(n, i) = acc * vol;
      }
  }
  return out;
}

Eigen::VectorXd CouplingG::evaluate(const DensityField& m) const {
  return evaluate_terminal(m.grid, m.mask, m.slice(m.n_steps));
}

Eigen::VectorXd CouplingG::evaluate_terminal(const Grid& grid, const Mask& mask,
                                             const Eigen::VectorXd& mT) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(mask.size());
  for (int i = 0; i < mask.size(); ++i) {
    const Vec xi = grid.center(mask.cells[i]);
    if (terminal_cost) g[i] += terminal_cost(xi);
    if (depends_on_m) {
      if (mode == Mode::local && local_g) {
        g[i] += local_g(xi, mT[i]);
      } else if (mode == Mode::convolution && kernel) {
        double acc = 0.0;
        for (int j = 0; j < mask.size(); ++j)
          acc += kernel(xi, grid.center(mask.cells[j])) * mT[j];
        g[i] += acc * grid.cell_volume();
      }
    }
  }
  return g;
}

CouplingF zero_coupling_f() {
  CouplingF f;
  f.mode = CouplingF::Mode::local;
  f.local_f = [](double, VecRef, double) { return 0.0; };
  f.sup_bound = 0.0;
  f.monotone = true;
  f.depends_on_m = false;
  return f;
}

CouplingF local_linear_coupling_f(double kappa, double sup_bound) {
  CouplingF f;
  f.mode = CouplingF::Mode::local;
  f.local_f = [kappa](double, VecRef, double m) { return kappa * m; };
  f.sup_bound = sup_bound;
  f.monotone = kappa >= 0.0;
  return f;
}

CouplingF local_saturating_coupling_f(double kappa) {
  CouplingF f;
  f.mode = CouplingF::Mode::local;
  f.local_f = [kappa](double, VecRef, double m) { return kappa * m / (1.0 + std::max(m, 0.0)); };
  f.sup_bound = std::abs(kappa);
  f.monotone = kappa >= 0.0;
  return f;
}

CouplingF convolution_coupling_f(double kappa, double width, int dim) {
  CouplingF f;
  f.mode = CouplingF::Mode::convolution;
  (void)dim;
  f.kernel = [kappa, width](VecRef x, VecRef y) {
    return kappa * std::exp(-(x - y).squaredNorm() / (2.0 * width * width));
  };
  f.sup_bound = std::abs(kappa);
  f.monotone = kappa >= 0.0;  // positive-definite Gaussian kernel
  return f;
}

CouplingG zero_coupling_g() {
  CouplingG g;
  g.w1inf_bound = 0.0;
  g.monotone = true;
  g.depends_on_m = false;
  return g;
}

CouplingG terminal_cost_coupling_g(std::function<double(VecRef)> g0, double w1inf_bound) {
  CouplingG g;
  g.terminal_cost = std::move(g0);
  g.w1inf_bound = w1inf_bound;
  g.monotone = true;
  g.depends_on_m = false;
  return g;
}

CouplingG convolution_coupling_g(double kappa, double width, int dim) {
  CouplingG g;
  (void)dim;
  g.mode = CouplingG::Mode::convolution;
  g.kernel = [kappa, width](VecRef x, VecRef y) {
    return kappa * std::exp(-(x - y).squaredNorm() / (2.0 * width * width));
  };
  g.w1inf_bound = std::abs(kappa) * (1.0 + 1.0 / std::max(width, 1e-9));
  g.monotone = kappa >= 0.0;
  g.depends_on_m = true;
  return g;
}

}  // namespace mfg
