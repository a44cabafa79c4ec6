#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/models.hpp"

namespace mfg {

/// Allocation-free dynamics evaluators for the path loop. sigma is the
/// matrix in dX = b dt + sqrt(2) sigma dW; diagonal sigma writes only the
/// diagonal entries of out (row-major dim x dim otherwise).
struct SdeDrift {
  std::function<void(double t, const double* x, double* out)> eval;
};
struct SdeSigma {
  std::function<void(const double* x, double* out)> eval;
  bool diagonal = true;
};

SdeDrift sde_drift_from(std::function<Vec(double, VecRef)> b, int dim);
SdeSigma sde_sigma_from(const DiffusionField& a, int dim);

struct SDEConfig {
  double dt = 1e-3;
  long n_paths = 1000;
  std::uint64_t seed = 0;
  int substep_limit = 20;   // recursive step halvings before flagging an exit
  int snapshots = 33;       // stored sample times (including 0 and T)
  bool store_paths = true;
};

struct StoredPaths {
  int dim = 1;
  std::vector<double> times;
  // positions[s * n_paths * dim + p * dim + k]; frozen at the exit state for
  // exited paths
  std::vector<double> positions;
  std::vector<std::uint8_t> exited;
  std::vector<double> exit_time;  // +inf when the path never exited
  long n_paths = 0;
};

struct ViabilityStats {
  double exit_fraction = 0.0;
  double min_distance_q01 = 0.0;
  double min_distance_q10 = 0.0;
  double min_distance_q50 = 0.0;
  double lyapunov_slope = 0.0;  // filled by lyapunov_check
  long n_paths = 0;
  double dt = 0.0;
};

/// Initial state: a fixed point or a density sampled per path by inverse
/// transform over mask cells.
struct InitialState {
  std::optional<Vec> point;
  const Grid* grid = nullptr;
  const Mask* mask = nullptr;
  Eigen::VectorXd density;  // cell values; need not be normalized
};

/// Euler-Maruyama with counter-based per-path streams. A step landing
/// outside the domain is retried by recursive halving from the pre-step
/// state; beyond substep_limit halvings the path is flagged exited and
/// frozen. Paths run in parallel (MFG_THREADS caps the worker count) and
/// statistics are independent of the schedule.
ViabilityStats simulate(const DomainSpec& domain, const SdeSigma& sigma, const SdeDrift& drift,
                        const InitialState& x0, double T, const SDEConfig& config,
                        StoredPaths* paths_out = nullptr);

struct LyapunovReport {
  std::vector<double> times;
  std::vector<double> mean_neg_log_d;  // E[-log d(X_{t and tau})]
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;
  bool pass = false;      // fitted slope <= C_expected + 2 se
  bool diverged = false;  // mean blow-up before T
};

/// Fits C in E[-log d(X_{t and tau})] <= -log d(X_0) + C t over the stored
/// snapshot times. Throws NoStoredPaths when paths were not stored.
LyapunovReport lyapunov_check(const StoredPaths& paths, const DomainSpec& domain,
                              double C_expected);

/// Feedback drift b(s,x) = -Hp(s, x, Du(s,x)) from a value function
/// (trace-form dynamics; no tilde-b adjustment). The sampler must outlive
/// the returned drift.
SdeDrift feedback_drift(const GradientSampler& du, const HamiltonianModel& model, int dim);

/// Histogram of surviving paths at the stored time nearest t, normalized by
/// n_paths * h^dim; missing_mass reports the exited fraction plus any mass
/// that left the mask.
Eigen::VectorXd empirical_density(const StoredPaths& paths, const Grid& grid, const Mask& mask,
                                  double t, double* missing_mass = nullptr);

int worker_count();

}  // namespace mfg
