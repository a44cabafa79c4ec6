#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "mfg/mfg.hpp"
#include "mfg/sde.hpp"

namespace mfg {

/// Parsed and validated run configuration. Unknown keys anywhere in the JSON
/// are rejected; every numeric parameter is checked finite and in range.
struct RunConfig {
  DomainSpec domain;
  DiffusionField diffusion;
  HamiltonianModel hamiltonian;
  bool has_hamiltonian = false;
  CouplingF coupling_f;
  CouplingG coupling_g;
  std::function<double(VecRef)> m0;
  bool normalize_m0 = true;
  std::function<double(VecRef)> f_source;  // m-independent F for standalone HJB runs
  bool has_f_source = false;

  double T = 1.0;
  MFGConfig solver;

  SDEConfig sde;
  bool sde_from_density = true;  // start from m0 unless a point is given
  Vec sde_x0;

  std::function<Vec(double, VecRef)> drift;  // standalone fp / sde drift
  bool has_drift = false;
  std::string drift_form = "fp_divergence";  // fp_divergence | fp_trace | sde

  double invariance_delta = 0.1;
  double invariance_C = 0.0;
  bool invariance_auto_C = true;

  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);

MFGProblem make_problem(const RunConfig& config);

/// Standalone drift in divergence form (converts fp_trace / sde forms with
/// the configured diffusion's tilde-b).
DriftField make_divergence_drift(const RunConfig& config);

}  // namespace mfg
