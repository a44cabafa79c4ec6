#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Machine-readable failure categories, mapped to CLI exit codes
/// (config -> 2, everything else -> 3).
enum class Errc {
  config_invalid,
  empty_domain,
  blend_infeasible,
  non_convex_cost,
  growth_violation,
  cfl_violation,
  solver_diverged,
  negative_density,
  drift_unbounded_on_mask,
  grid_mismatch,
  drift_mismatch,
  no_stored_paths,
  io_failure,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline int exit_code_for(Errc code) {
  return code == Errc::config_invalid ? 2 : 3;
}

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace mfg
