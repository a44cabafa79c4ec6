#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mfg/geometry.hpp"
#include "mfg/models.hpp"

namespace mfg {

enum class InvarianceCondition {
  hjb,                     // tr(a D2d) - Hp.Dd >= a Dd.Dd / d - C d
  fp_trace,                // tr(a D2d) - b.Dd  >= ...
  fp_divergence,           // div(a Dd) - b.Dd  >= ...
  sde,                     // tr(a D2d) + b.Dd  >= ...   (note the + sign)
  generalized_per_piece,   // per-piece d_i version on Gamma_delta^i
  generalized_barrier,     // product-barrier psi version near the boundary
};

std::string to_string(InvarianceCondition c);

struct MarginSample {
  double t = 0.0;
  Vec x;
  Vec p;          // p for hjb/generalized, alpha for sde, empty for fp
  double d = 0.0; // distance (or barrier value) entering the C-term
  double margin0 = 0.0;  // margin at C = 0
  int level = 0;         // geometric d-level index (0 = coarsest)
  int piece = 0;
};

struct InvarianceReport {
  InvarianceCondition condition;
  double C = 0.0;
  std::vector<MarginSample> samples;
  double min_margin = 0.0;  // min over samples of margin0 + C*d
  double fitted_C = 0.0;    // +inf when the deficit/d ratio diverges as d->0
  bool pass = false;
  double resolution = 0.0;  // finest sampled distance level
  std::string caveats;      // sampling caveats; never a proof claim
};

/// Layer sampling on geometric distance levels delta/2^j crossed with
/// tangential boundary points; the binding regime of every condition is
/// d -> 0 and extreme p, so levels refine toward the boundary.
struct LayerSampling {
  double delta = 0.1;
  int levels = 9;
  int tangential = 12;
  std::vector<double> t_samples{0.0};
  std::vector<double> p_magnitudes{0.0, 1.0, 10.0, 100.0};
};

using DriftFn = std::function<Vec(double, VecRef)>;            // b(t,x)
using ControlledDriftFn = std::function<Vec(double, VecRef, VecRef)>;  // b(t,x,alpha)

InvarianceReport check_hjb_invariance(const DomainSpec& domain, const DiffusionField& a,
                                      const HamiltonianModel& model, double C,
                                      const LayerSampling& sampling);

InvarianceReport check_fp_invariance(const DomainSpec& domain, const DiffusionField& a,
                                     const DriftFn& b, bool divergence_form, double C,
                                     const LayerSampling& sampling);

InvarianceReport check_sde_invariance(const DomainSpec& domain, const DiffusionField& sigma_field,
                                      const ControlledDriftFn& b,
                                      const std::vector<Vec>& alpha_samples, double C,
                                      const LayerSampling& sampling);

enum class GeneralizedMode { per_piece, barrier };

InvarianceReport check_generalized(const DomainSpec& domain, const DiffusionField& a,
                                   const HamiltonianModel& model, double C, GeneralizedMode mode,
                                   const LayerSampling& sampling);

/// Smallest nonnegative C covering all sampled deficits, max over samples of
/// max(0, -margin0)/d; +inf when that ratio grows monotonically (by at least
/// 2x overall) across the three finest distance levels.
double fit_constant(const std::vector<MarginSample>& samples, int levels);

/// Re-evaluates pass/min_margin of an existing sample set at a new C.
void apply_constant(InvarianceReport* report, double C);

}  // namespace mfg
