#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfg/geometry.hpp"
#include "mfg/grid.hpp"

namespace mfg {

/// Diffusion matrix a(x), symmetric PSD on the closure, positive inside.
/// sigma (with a = sigma sigma^T) is optional and required only by the SDE
/// layer. div_a, when set, gives the analytic column divergence used for the
/// trace-to-divergence rewrite; otherwise central differences are used.
struct DiffusionField {
  std::function<Mat(VecRef)> a;
  std::function<Mat(VecRef)> sigma;
  std::function<Vec(VecRef)> div_a;
  /// Optional allocation-free diagonal-sigma evaluator (writes dim entries);
  /// the Monte Carlo stepper prefers it when present.
  std::function<void(const double*, double*)> sigma_diag_raw;
  double lipschitz_const = 0.0;
  bool has_sigma = false;
  bool diagonal = true;

  /// Sampled uniform ellipticity constant on {d >= 1/r}.
  double ellipticity(const DomainSpec& domain, double r, int samples_per_axis = 17) const;
};

/// tilde-b: b~_j(x) = sum_i d a_ij / d x_i. Zero for constant a.
Vec divergence_drift(const DiffusionField& a, VecRef x);

DiffusionField constant_diffusion(const Mat& a0);
DiffusionField scaled_identity_diffusion(int dim, double eps);
/// Per-axis a_kk(x) = scale * (x_k - lo_k)(hi_k - x_k) / width_k^2-normalized
/// form on a box: the classic boundary-degenerate diffusion with
/// sigma_kk = sqrt(a_kk). On the unit box this is x(1-x) per axis. sigma is
/// only 1/2-Hoelder at the boundary.
DiffusionField wright_fisher_diffusion(const Vec& lo, const Vec& hi, double scale = 1.0);

/// Boundary-degenerate diffusion with a smooth factor: per axis
/// sigma_kk = scale * (x_k - lo_k)(hi_k - x_k) / width_k, a = sigma^2.
/// sigma is W^{2,inf}, which the Lipschitz/semiconcavity theory asks for.
DiffusionField smooth_degenerate_diffusion(const Vec& lo, const Vec& hi, double scale = 1.0);

struct GrowthRecord {
  enum class Kind { bounded, linear_in_p, power };
  Kind kind = Kind::bounded;
  double q_conj = 2.0;     // q' for the power record
  double hp_bound = 0.0;   // |Hp| bound for the bounded record
};

struct HamiltonianModel {
  std::function<double(double, VecRef, VecRef)> H;   // (t, x, p)
  std::function<Vec(double, VecRef, VecRef)> Hp;
  double h0_bound = 0.0;
  GrowthRecord growth;
  bool convex_in_p = true;
  std::optional<double> hx_lower;  // constant in H_x . p >= -C (1 + |p|^2)
  std::string label;
};

/// Bregman gap E(q,p) = H(q) - H(p) - Hp(p).(q - p); nonnegative for convex H.
double bregman_gap(const HamiltonianModel& model, double t, VecRef x, VecRef q, VecRef p);

/// Running cost for the bounded-control model; quadratic() uses the closed
/// form |alpha|^2/2, custom costs are maximized by projected gradient ascent.
struct RunningCost {
  std::function<double(VecRef x, VecRef alpha)> L;
  std::function<Vec(VecRef x, VecRef alpha)> dL_dalpha;  // optional, FD fallback
  bool quadratic = false;
  static RunningCost quadratic_cost();
};

/// Bounded controls: drift M*Dd(x) + alpha over the ball |alpha| <= R,
/// H(x,p) = sup(-alpha.p - M Dd.p - L). Throws NonConvexCost when a sampled
/// Hessian of L in alpha has a negative eigenvalue.
HamiltonianModel example1_hamiltonian(double M, double control_radius, const RunningCost& L,
                                      const DomainSpec& domain);

/// Unbounded cone controls alpha_i >= 0 with B(x) = diag(Dd(x)) and
/// L = eta |alpha|^q: coercive Hamiltonian with growth q' = q/(q-1).
/// Throws GrowthViolation when quadratic_guard is set and q < 2.
HamiltonianModel example2_hamiltonian(double M, double eta, double q, double c0,
                                      const DomainSpec& domain, bool quadratic_guard = true);

HamiltonianModel quadratic_hamiltonian(int dim, double scale = 1.0);
/// H(x,p) = -b(x).p (linear drift model), Hp = -b.
HamiltonianModel linear_drift_hamiltonian(std::function<Vec(VecRef)> b, double b_bound);
HamiltonianModel zero_hamiltonian(int dim);

/// Clamp H at +-1/eps; Hp is zeroed where the clamp is active.
HamiltonianModel truncate_hamiltonian(const HamiltonianModel& model, double eps);

/// Structural checks ((H0), (convex), (linder), (quadgrow), optional (Hx)),
/// sampled; report-only.
struct StructureCheck {
  std::string condition;
  double worst = 0.0;    // worst sampled ratio/margin
  double bound = 0.0;    // declared bound it is compared to
  bool pass = true;
  std::string detail;
};
struct StructureReport {
  std::vector<StructureCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};
struct StructureSamples {
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> p;
};
StructureSamples default_structure_samples(const DomainSpec& domain, double T,
                                           double p_max = 100.0);
StructureReport check_structure(const HamiltonianModel& model, const DiffusionField& a,
                                const StructureSamples& samples);

/// Coupling F(t,x,m): local f(t,x,m(t,x)) or convolution (K*m(t))(x).
struct CouplingF {
  enum class Mode { local, convolution };
  Mode mode = Mode::local;
  std::function<double(double, VecRef, double)> local_f;
  std::function<double(VecRef, VecRef)> kernel;
  double sup_bound = 0.0;
  bool monotone = false;
  std::optional<double> lipschitz_in_x;
  bool depends_on_m = true;

  SpaceTimeField evaluate(const DensityField& m) const;
};

/// Terminal coupling G(x, m(T)): m-independent terminal cost plus optional
/// local or convolution dependence on the terminal density.
struct CouplingG {
  enum class Mode { local, convolution };
  Mode mode = Mode::local;
  std::function<double(VecRef)> terminal_cost;              // g0(x), may be null
  std::function<double(VecRef, double)> local_g;            // g(x, mT(x)), may be null
  std::function<double(VecRef, VecRef)> kernel;             // convolution kernel
  double w1inf_bound = 0.0;
  bool monotone = false;
  bool depends_on_m = false;

  Eigen::VectorXd evaluate(const DensityField& m) const;
  Eigen::VectorXd evaluate_terminal(const Grid& grid, const Mask& mask,
                                    const Eigen::VectorXd& mT) const;
};

CouplingF zero_coupling_f();
/// f(t,x,m) = kappa * m; monotone, bounded on mass-M density sets only
/// through the solver's own density bounds (sup_bound records the envelope).
CouplingF local_linear_coupling_f(double kappa, double sup_bound);
/// f = kappa * m / (1 + m): monotone and globally bounded by kappa.
CouplingF local_saturating_coupling_f(double kappa);
CouplingF convolution_coupling_f(double kappa, double width, int dim);

CouplingG zero_coupling_g();
CouplingG terminal_cost_coupling_g(std::function<double(VecRef)> g0, double w1inf_bound);
CouplingG convolution_coupling_g(double kappa, double width, int dim);

}  // namespace mfg
