#include "mfg/invariance.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

std::string to_string(InvarianceCondition c) {
  switch (c) {
    case InvarianceCondition::hjb: return "hjb";
    case InvarianceCondition::fp_trace: return "fp_trace";
    case InvarianceCondition::fp_divergence: return "fp_divergence";
    case InvarianceCondition::sde: return "sde";
    case InvarianceCondition::generalized_per_piece: return "generalized_per_piece";
    case InvarianceCondition::generalized_barrier: return "generalized_barrier";
  }
  return "?";
}

namespace {

constexpr double kMarginTol = 1e-10;

struct LayerPoint {
  Vec x;
  int level;
  int piece;
};

// Points at distance delta/2^j inward from sampled boundary points of each
// piece. When restrict_to_piece is set the point only needs d_i < delta for
// its own piece (Gamma_delta^i); otherwise it must lie inside the domain.
std::vector<LayerPoint> layer_points(const DomainSpec& domain, const LayerSampling& s,
                                     bool per_piece) {
  std::vector<LayerPoint> pts;
  for (int pi = 0; pi < static_cast<int>(domain.pieces.size()); ++pi) {
    const auto& piece = domain.pieces[pi];
    const auto boundary = piece.boundary_sampler(s.tangential);
    for (const Vec& y : boundary) {
      const Vec inward = piece.gradient(y);
      for (int j = 0; j < s.levels; ++j) {
        const double d = s.delta / std::pow(2.0, j);
        const Vec x = y + d * inward;
        const double d_omega = distance_value(domain, x);
        if (d_omega <= 0.0) continue;
        if (!per_piece && d_omega >= s.delta) continue;
        pts.push_back({x, j, pi});
      }
    }
  }
  return pts;
}

std::vector<Vec> p_directions(const DomainSpec& domain, const Vec& x) {
  std::vector<Vec> dirs;
  const int dim = domain.dim;
  for (int k = 0; k < dim; ++k) {
    Vec e = Vec::Zero(dim);
    e[k] = 1.0;
    dirs.push_back(e);
    dirs.push_back(Vec(-e));
  }
  const Vec dd = signed_distance(domain, x).grad;
  if (dd.norm() > 1e-12) {
    dirs.push_back(dd);
    dirs.push_back(Vec(-dd));
  }
  return dirs;
}

void finalize(InvarianceReport* report, const LayerSampling& s) {
  report->resolution = s.delta / std::pow(2.0, s.levels - 1);
  report->fitted_C = fit_constant(report->samples, s.levels);
  apply_constant(report, report->C);
  report->caveats =
      "sampled certificate: holds at the listed points only; a.e.-null sets and "
      "unsampled p directions are not distinguished";
}

}  // namespace

void apply_constant(InvarianceReport* report, double C) {
  report->C = C;
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& smp : report->samples)
    min_margin = std::min(min_margin, smp.margin0 + C * smp.d);
  report->min_margin = report->samples.empty() ? 0.0 : min_margin;
  report->pass = report->min_margin >= -kMarginTol;
}

double fit_constant(const std::vector<MarginSample>& samples, int levels) {
  std::vector<double> level_ratio(levels, 0.0);
  double fitted = 0.0;
  for (const auto& smp : samples) {
    const double deficit = std::max(0.0, -smp.margin0);
    const double ratio = deficit / std::max(smp.d, 1e-300);
    fitted = std::max(fitted, ratio);
    level_ratio[smp.level] = std::max(level_ratio[smp.level], ratio);
  }
  if (levels >= 3) {
    const double r0 = level_ratio[levels - 3];
    const double r1 = level_ratio[levels - 2];
    const double r2 = level_ratio[levels - 1];
    const bool growing = r2 > r1 && r1 > r0 && r0 > 0.0;
    if (growing && r2 >= 2.0 * r0) return std::numeric_limits<double>::infinity();
  }
  return fitted;
}

InvarianceReport check_hjb_invariance(const DomainSpec& domain, const DiffusionField& a,
                                      const HamiltonianModel& model, double C,
                                      const LayerSampling& sampling) {
  InvarianceReport report;
  report.condition = InvarianceCondition::hjb;
  for (const auto& lp : layer_points(domain, sampling, false)) {
    const DistanceEval de = signed_distance(domain, lp.x);
    const Mat am = a.a(lp.x);
    const double base = (am * de.hess).trace() - (am * de.grad).dot(de.grad) / de.value;
    for (double t : sampling.t_samples)
      for (const Vec& dir : p_directions(domain, lp.x))
        for (double mag : sampling.p_magnitudes) {
          const Vec p = mag * dir;
          MarginSample smp;
          smp.t = t;
          smp.x = lp.x;
          smp.p = p;
          smp.d = de.value;
          smp.level = lp.level;
          smp.piece = lp.piece;
          smp.margin0 = base - model.Hp(t, lp.x, p).dot(de.grad);
          report.samples.push_back(std::move(smp));
          if (mag == 0.0) break;  // p = 0 once per direction family
        }
  }
  finalize(&report, sampling);
  apply_constant(&report, C);
  return report;
}

InvarianceReport check_fp_invariance(const DomainSpec& domain, const DiffusionField& a,
                                     const DriftFn& b, bool divergence_form, double C,
                                     const LayerSampling& sampling) {
  InvarianceReport report;
  report.condition =
      divergence_form ? InvarianceCondition::fp_divergence : InvarianceCondition::fp_trace;
  for (const auto& lp : layer_points(domain, sampling, false)) {
    const DistanceEval de = signed_distance(domain, lp.x);
    const Mat am = a.a(lp.x);
    double second_order = (am * de.hess).trace();
    if (divergence_form) second_order += divergence_drift(a, lp.x).dot(de.grad);
    const double base = second_order - (am * de.grad).dot(de.grad) / de.value;
    for (double t : sampling.t_samples) {
      MarginSample smp;
      smp.t = t;
      smp.x = lp.x;
      smp.d = de.value;
      smp.level = lp.level;
      smp.piece = lp.piece;
      smp.margin0 = base - b(t, lp.x).dot(de.grad);
      report.samples.push_back(std::move(smp));
    }
  }
  finalize(&report, sampling);
  apply_constant(&report, C);
  return report;
}

InvarianceReport check_sde_invariance(const DomainSpec& domain, const DiffusionField& sigma_field,
                                      const ControlledDriftFn& b,
                                      const std::vector<Vec>& alpha_samples, double C,
                                      const LayerSampling& sampling) {
  InvarianceReport report;
  report.condition = InvarianceCondition::sde;
  for (const auto& lp : layer_points(domain, sampling, false)) {
    const DistanceEval de = signed_distance(domain, lp.x);
    Mat am;
    if (sigma_field.has_sigma) {
      const Mat s = sigma_field.sigma(lp.x);
      am = s * s.transpose();
    } else {
      am = sigma_field.a(lp.x);
    }
    const double base = (am * de.hess).trace() - (am * de.grad).dot(de.grad) / de.value;
    for (double t : sampling.t_samples)
      for (const Vec& alpha : alpha_samples) {
        MarginSample smp;
        smp.t = t;
        smp.x = lp.x;
        smp.p = alpha;
        smp.d = de.value;
        smp.level = lp.level;
        smp.piece = lp.piece;
        // drift sign: +b per the dynamics condition, versus -Hp on the HJB side
        smp.margin0 = base + b(t, lp.x, alpha).dot(de.grad);
        report.samples.push_back(std::move(smp));
      }
  }
  finalize(&report, sampling);
  apply_constant(&report, C);
  return report;
}

InvarianceReport check_generalized(const DomainSpec& domain, const DiffusionField& a,
                                   const HamiltonianModel& model, double C, GeneralizedMode mode,
                                   const LayerSampling& sampling) {
  InvarianceReport report;
  report.condition = mode == GeneralizedMode::per_piece
                         ? InvarianceCondition::generalized_per_piece
                         : InvarianceCondition::generalized_barrier;
  BarrierFunction psi;
  if (mode == GeneralizedMode::barrier) psi = build_barrier(domain, sampling.delta);

  for (const auto& lp : layer_points(domain, sampling, mode == GeneralizedMode::per_piece)) {
    const Mat am = a.a(lp.x);
    double dist, base;
    Vec grad;
    if (mode == GeneralizedMode::per_piece) {
      const auto& piece = domain.pieces[lp.piece];
      dist = piece.distance(lp.x);
      if (dist <= 0.0 || dist >= sampling.delta) continue;
      grad = piece.gradient(lp.x);
      base = (am * piece.hessian(lp.x)).trace() - (am * grad).dot(grad) / dist;
    } else {
      dist = psi.value(lp.x);
      if (dist <= 0.0) continue;
      grad = psi.gradient(lp.x);
      base = (am * psi.hessian(lp.x)).trace() - (am * grad).dot(grad) / dist;
    }
    for (double t : sampling.t_samples)
      for (const Vec& dir : p_directions(domain, lp.x))
        for (double mag : sampling.p_magnitudes) {
          const Vec p = mag * dir;
          MarginSample smp;
          smp.t = t;
          smp.x = lp.x;
          smp.p = p;
          smp.d = dist;
          smp.level = lp.level;
          smp.piece = lp.piece;
          smp.margin0 = base - model.Hp(t, lp.x, p).dot(grad);
          report.samples.push_back(std::move(smp));
          if (mag == 0.0) break;
        }
  }
  finalize(&report, sampling);
  apply_constant(&report, C);
  return report;
}

}  // namespace mfg
