#include "mfg/config.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "mfg/errors.hpp"
#include "mfg/io.hpp"
#include "mfg/rng.hpp"

namespace mfg {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(Errc::config_invalid, "config." + where + ": " + what);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad(where, "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad(where, "unknown key '" + it.key() + "'");
}

double num(const json& j, const std::string& key, const std::string& where,
           bool required = true, double fallback = 0.0) {
  if (!j.contains(key)) {
    if (required) bad(where, "missing field '" + key + "'");
    return fallback;
  }
  if (!j[key].is_number()) bad(where + "." + key, "must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) bad(where + "." + key, "must be finite");
  return v;
}

std::string str(const json& j, const std::string& key, const std::string& where,
                const std::string& fallback = "") {
  if (!j.contains(key)) {
    if (fallback.empty()) bad(where, "missing field '" + key + "'");
    return fallback;
  }
  if (!j[key].is_string()) bad(where + "." + key, "must be a string");
  return j[key].get<std::string>();
}

Vec vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) bad(where, "must be a non-empty array");
  Vec v(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) bad(where, "entries must be numbers");
    v[k] = j[k].get<double>();
    if (!std::isfinite(v[k])) bad(where, "entries must be finite");
  }
  return v;
}

DomainSpec parse_domain(const json& j) {
  check_keys(j, {"kind", "bounds", "center", "radius", "delta0"}, "domain");
  const std::string kind = str(j, "kind", "domain");
  const double delta0 = num(j, "delta0", "domain", false, 0.25);
  if (delta0 <= 0.0) bad("domain.delta0", "must be positive");
  if (kind == "interval") {
    const Vec b = vec(j.at("bounds"), "domain.bounds");
    if (b.size() != 2 || b[0] >= b[1]) bad("domain.bounds", "expected [a, b] with a < b");
    return make_interval(b[0], b[1], delta0);
  }
  if (kind == "box" || kind == "generalized_box") {
    if (!j.contains("bounds") || !j["bounds"].is_array()) bad("domain.bounds", "missing");
    const auto& rows = j["bounds"];
    Vec lo(rows.size()), hi(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Vec r = vec(rows[k], "domain.bounds");
      if (r.size() != 2 || r[0] >= r[1]) bad("domain.bounds", "rows must be [lo, hi]");
      lo[k] = r[0];
      hi[k] = r[1];
    }
    if (lo.size() > kMaxDim) bad("domain.bounds", "at most 3 dimensions");
    return make_box(lo, hi, delta0,
                    kind == "generalized_box" ? DomainKind::generalized : DomainKind::smooth);
  }
  if (kind == "disk") {
    const Vec c = vec(j.at("center"), "domain.center");
    const double r = num(j, "radius", "domain");
    if (r <= 0.0) bad("domain.radius", "must be positive");
    return make_disk(c, r, delta0);
  }
  bad("domain.kind", "unknown kind '" + kind + "'");
}

DiffusionField parse_diffusion(const json& j, const DomainSpec& domain) {
  check_keys(j, {"type", "scale", "eps", "value"}, "diffusion");
  const std::string type = str(j, "type", "diffusion");
  if (type == "wright_fisher")
    return wright_fisher_diffusion(domain.box_lo, domain.box_hi,
                                   num(j, "scale", "diffusion", false, 1.0));
  if (type == "scaled_identity")
    return scaled_identity_diffusion(domain.dim, num(j, "eps", "diffusion"));
  if (type == "constant") {
    if (j.contains("value") && j["value"].is_array()) {
      const Vec diag = vec(j["value"], "diffusion.value");
      Mat a0 = Mat::Zero(diag.size(), diag.size());
      for (int k = 0; k < diag.size(); ++k) a0(k, k) = diag[k];
      return constant_diffusion(a0);
    }
    return constant_diffusion(Mat(num(j, "value", "diffusion") *
                                  Mat::Identity(domain.dim, domain.dim)));
  }
  bad("diffusion.type", "unknown type '" + type + "'");
}

std::function<double(VecRef)> parse_scalar_field(const json& j, const std::string& where) {
  check_keys(j, {"type", "value", "coeffs", "offset", "center", "scale", "width", "amp", "freq"},
             where);
  const std::string type = str(j, "type", where);
  if (type == "constant") {
    const double v = num(j, "value", where);
    return [v](VecRef) { return v; };
  }
  if (type == "linear") {
    const Vec c = vec(j.at("coeffs"), where + ".coeffs");
    const double off = num(j, "offset", where, false, 0.0);
    return [c, off](VecRef x) { return off + c.dot(x); };
  }
  if (type == "abs_dist") {
    const Vec c = vec(j.at("center"), where + ".center");
    const double s = num(j, "scale", where, false, 1.0);
    return [c, s](VecRef x) { return s * (x - c).norm(); };
  }
  if (type == "cosine") {
    const Vec f = vec(j.at("freq"), where + ".freq");
    const double amp = num(j, "amp", where, false, 1.0);
    return [f, amp](VecRef x) { return amp * std::cos(M_PI * f.dot(x)); };
  }
  if (type == "gaussian") {
    const Vec c = vec(j.at("center"), where + ".center");
    const double w = num(j, "width", where);
    const double amp = num(j, "amp", where, false, 1.0);
    if (w <= 0.0) bad(where + ".width", "must be positive");
    return [c, w, amp](VecRef x) { return amp * std::exp(-(x - c).squaredNorm() / (2 * w * w)); };
  }
  if (type == "uniform") {
    return [](VecRef) { return 1.0; };
  }
  if (type == "bump") {
    const Vec c = vec(j.at("center"), where + ".center");
    const double w = num(j, "width", where);
    if (w <= 0.0) bad(where + ".width", "must be positive");
    return [c, w](VecRef x) {
      const double r2 = (x - c).squaredNorm() / (w * w);
      return r2 >= 1.0 ? 0.0 : (1.0 - r2) * (1.0 - r2);
    };
  }
  bad(where + ".type", "unknown type '" + type + "'");
}

std::function<Vec(double, VecRef)> parse_drift(const json& j, const std::string& where,
                                               const DomainSpec& domain,
                                               const DiffusionField& diffusion) {
  check_keys(j, {"type", "value", "scale", "width"}, where);
  const std::string type = str(j, "type", where);
  const int dim = domain.dim;
  if (type == "zero")
    return [dim](double, VecRef) { return Vec(Vec::Zero(dim)); };
  if (type == "constant") {
    const Vec v = vec(j.at("value"), where + ".value");
    if (v.size() != dim) bad(where + ".value", "dimension mismatch");
    return [v](double, VecRef) { return v; };
  }
  const double scale = num(j, "scale", where, false, 1.0);
  if (type == "tilde") {
    const DiffusionField a = diffusion;
    return [a, scale](double, VecRef x) { return Vec(scale * divergence_drift(a, x)); };
  }
  if (type == "inward" || type == "outward") {
    const double sign = type == "inward" ? 1.0 : -1.0;
    const DomainSpec dom = domain;
    return [dom, scale, sign](double, VecRef x) {
      return Vec(sign * scale * signed_distance(dom, x).grad);
    };
  }
  if (type == "inward_pieces") {
    // sum of the inward normals of every piece closer than width; near a
    // corner all adjacent pieces push, which is what the per-piece
    // condition needs
    const DomainSpec dom = domain;
    const double width = num(j, "width", where, false, domain.min_tube_width());
    return [dom, scale, width](double, VecRef x) {
      Vec b = Vec::Zero(x.size());
      for (const auto& piece : dom.pieces)
        if (piece.distance(x) < width) b += piece.gradient(x);
      return Vec(scale * b);
    };
  }
  bad(where + ".type", "unknown type '" + type + "'");
}

HamiltonianModel parse_hamiltonian(const json& j, const DomainSpec& domain,
                                   const DiffusionField& diffusion) {
  check_keys(j, {"type", "M", "control_radius", "eta", "q", "c0", "scale", "drift"}, "hamiltonian");
  const std::string type = str(j, "type", "hamiltonian");
  if (type == "example1")
    return example1_hamiltonian(num(j, "M", "hamiltonian"), num(j, "control_radius", "hamiltonian"),
                                RunningCost::quadratic_cost(), domain);
  if (type == "example2")
    return example2_hamiltonian(num(j, "M", "hamiltonian"), num(j, "eta", "hamiltonian"),
                                num(j, "q", "hamiltonian"), num(j, "c0", "hamiltonian", false, 0.0),
                                domain);
  if (type == "quadratic")
    return quadratic_hamiltonian(domain.dim, num(j, "scale", "hamiltonian", false, 1.0));
  if (type == "zero") return zero_hamiltonian(domain.dim);
  if (type == "linear_drift") {
    if (!j.contains("drift")) bad("hamiltonian", "linear_drift needs a 'drift' block");
    auto b = parse_drift(j["drift"], "hamiltonian.drift", domain, diffusion);
    double bound = 0.0;
    // sampled bound over the box, used by the growth record
    const int n = 9;
    std::vector<int> idx(domain.dim, 0);
    while (true) {
      Vec x(domain.dim);
      for (int k = 0; k < domain.dim; ++k)
        x[k] = domain.box_lo[k] + (domain.box_hi[k] - domain.box_lo[k]) * (idx[k] + 0.5) / n;
      bound = std::max(bound, b(0.0, x).norm());
      int carry = 0;
      while (carry < domain.dim && ++idx[carry] == n) idx[carry++] = 0;
      if (carry == domain.dim) break;
    }
    return linear_drift_hamiltonian([b](VecRef x) { return b(0.0, x); }, bound);
  }
  bad("hamiltonian.type", "unknown type '" + type + "'");
}

CouplingF parse_coupling_f(const json& j) {
  check_keys(j, {"mode", "type", "kappa", "sup_bound", "width"}, "coupling_F");
  const std::string mode = str(j, "mode", "coupling_F", "local");
  if (mode == "convolution")
    return convolution_coupling_f(num(j, "kappa", "coupling_F"), num(j, "width", "coupling_F"), 0);
  const std::string type = str(j, "type", "coupling_F", "zero");
  if (type == "zero") return zero_coupling_f();
  if (type == "linear")
    return local_linear_coupling_f(num(j, "kappa", "coupling_F"),
                                   num(j, "sup_bound", "coupling_F", false, 10.0));
  if (type == "saturating") return local_saturating_coupling_f(num(j, "kappa", "coupling_F"));
  bad("coupling_F.type", "unknown type '" + type + "'");
}

CouplingG parse_coupling_g(const json& j) {
  check_keys(j, {"type", "expr", "w1inf_bound", "kappa", "width", "relaxed_bounded"},
             "coupling_G");
  // relaxed_bounded: accepted for forward compatibility with globally
  // Lipschitz Hamiltonians, where an L_inf bound on G would suffice; the
  // solver keeps the stronger W^{1,inf} requirement either way.
  const std::string type = str(j, "type", "coupling_G", "zero");
  if (type == "zero") return zero_coupling_g();
  if (type == "terminal") {
    if (!j.contains("expr")) bad("coupling_G", "terminal coupling needs 'expr'");
    return terminal_cost_coupling_g(parse_scalar_field(j["expr"], "coupling_G.expr"),
                                    num(j, "w1inf_bound", "coupling_G", false, 1.0));
  }
  if (type == "convolution")
    return convolution_coupling_g(num(j, "kappa", "coupling_G"), num(j, "width", "coupling_G"), 0);
  bad("coupling_G.type", "unknown type '" + type + "'");
}

}  // namespace

RunConfig parse_config(const json& j) {
  check_keys(j,
             {"domain", "diffusion", "hamiltonian", "coupling_F", "coupling_G", "m0", "F_source",
              "solver", "sde", "drift", "drift_form", "invariance", "seed"},
             "<root>");
  RunConfig cfg;
  if (!j.contains("domain")) bad("<root>", "missing 'domain'");
  cfg.domain = parse_domain(j["domain"]);
  if (!j.contains("diffusion")) bad("<root>", "missing 'diffusion'");
  cfg.diffusion = parse_diffusion(j["diffusion"], cfg.domain);

  if (j.contains("hamiltonian")) {
    cfg.hamiltonian = parse_hamiltonian(j["hamiltonian"], cfg.domain, cfg.diffusion);
    cfg.has_hamiltonian = true;
  }
  cfg.coupling_f = j.contains("coupling_F") ? parse_coupling_f(j["coupling_F"]) : zero_coupling_f();
  cfg.coupling_g = j.contains("coupling_G") ? parse_coupling_g(j["coupling_G"]) : zero_coupling_g();

  if (j.contains("F_source")) {
    cfg.f_source = parse_scalar_field(j["F_source"], "F_source");
    cfg.has_f_source = true;
  }

  if (j.contains("m0")) {
    json inner = j["m0"];
    if (inner.is_object() && inner.contains("normalize")) {
      if (!inner["normalize"].is_boolean()) bad("m0.normalize", "must be a boolean");
      cfg.normalize_m0 = inner["normalize"].get<bool>();
      inner.erase("normalize");
    }
    cfg.m0 = parse_scalar_field(inner, "m0");
  } else {
    cfg.m0 = [](VecRef) { return 1.0; };
  }

  if (!j.contains("solver")) bad("<root>", "missing 'solver'");
  const auto& js = j["solver"];
  check_keys(js,
             {"T", "h", "dt", "eps_penalty", "shrink_eps", "theta", "tol", "max_iters",
              "cfl_guard", "boundary_delta"},
             "solver");
  cfg.T = num(js, "T", "solver");
  cfg.solver.h = num(js, "h", "solver");
  cfg.solver.dt = num(js, "dt", "solver");
  if (cfg.T <= 0.0 || cfg.solver.h <= 0.0 || cfg.solver.dt <= 0.0)
    bad("solver", "T, h and dt must be positive");
  cfg.solver.eps_penalty = num(js, "eps_penalty", "solver", false, 0.0);
  cfg.solver.shrink_eps = num(js, "shrink_eps", "solver", false, 0.0);
  if (cfg.solver.eps_penalty < 0.0 || cfg.solver.shrink_eps < 0.0)
    bad("solver", "eps_penalty and shrink_eps must be nonnegative");
  cfg.solver.theta = num(js, "theta", "solver", false, 0.5);
  if (cfg.solver.theta <= 0.0 || cfg.solver.theta > 1.0) bad("solver.theta", "must be in (0, 1]");
  cfg.solver.tol = num(js, "tol", "solver", false, 1e-6);
  cfg.solver.max_iters = static_cast<int>(num(js, "max_iters", "solver", false, 60));
  if (cfg.solver.max_iters < 1) bad("solver.max_iters", "must be >= 1");
  if (js.contains("cfl_guard")) {
    if (!js["cfl_guard"].is_boolean()) bad("solver.cfl_guard", "must be a boolean");
    cfg.solver.cfl_guard = js["cfl_guard"].get<bool>();
  }
  cfg.solver.boundary_delta = num(js, "boundary_delta", "solver", false, 0.1);

  if (j.contains("sde")) {
    const auto& jd = j["sde"];
    check_keys(jd, {"dt", "n_paths", "substep_limit", "snapshots", "x0", "store_paths"}, "sde");
    cfg.sde.dt = num(jd, "dt", "sde", false, 1e-3);
    cfg.sde.n_paths = static_cast<long>(num(jd, "n_paths", "sde", false, 10000));
    if (cfg.sde.dt <= 0.0 || cfg.sde.n_paths < 1) bad("sde", "dt > 0 and n_paths >= 1 required");
    cfg.sde.substep_limit = static_cast<int>(num(jd, "substep_limit", "sde", false, 20));
    cfg.sde.snapshots = static_cast<int>(num(jd, "snapshots", "sde", false, 33));
    if (jd.contains("store_paths")) {
      if (!jd["store_paths"].is_boolean()) bad("sde.store_paths", "must be a boolean");
      cfg.sde.store_paths = jd["store_paths"].get<bool>();
    }
    if (jd.contains("x0")) {
      cfg.sde_x0 = vec(jd["x0"], "sde.x0");
      cfg.sde_from_density = false;
    }
  }

  if (j.contains("drift")) {
    cfg.drift = parse_drift(j["drift"], "drift", cfg.domain, cfg.diffusion);
    cfg.has_drift = true;
  }
  if (j.contains("drift_form")) {
    cfg.drift_form = j["drift_form"].get<std::string>();
    if (cfg.drift_form != "fp_divergence" && cfg.drift_form != "fp_trace" &&
        cfg.drift_form != "sde")
      bad("drift_form", "must be fp_divergence, fp_trace or sde");
  }

  if (j.contains("invariance")) {
    const auto& ji = j["invariance"];
    check_keys(ji, {"delta", "C"}, "invariance");
    cfg.invariance_delta = num(ji, "delta", "invariance", false, 0.1);
    if (ji.contains("C")) {
      if (ji["C"].is_string()) {
        if (ji["C"].get<std::string>() != "auto") bad("invariance.C", "must be 'auto' or a number");
        cfg.invariance_auto_C = true;
      } else {
        cfg.invariance_C = num(ji, "C", "invariance");
        cfg.invariance_auto_C = false;
      }
    }
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      bad("seed", "must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.sde.seed = cfg.seed;
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::config_invalid, std::string("config parse error: ") + e.what());
  }
  RunConfig cfg = parse_config(j);
  cfg.config_hash = fnv1a(text.data(), text.size());
  return cfg;
}

MFGProblem make_problem(const RunConfig& config) {
  if (!config.has_hamiltonian)
    fail(Errc::config_invalid, "this run needs a 'hamiltonian' block");
  MFGProblem p;
  p.domain = config.domain;
  p.a = config.diffusion;
  p.model = config.hamiltonian;
  p.F = config.coupling_f;
  p.G = config.coupling_g;
  p.m0 = config.m0;
  p.T = config.T;
  return p;
}

DriftField make_divergence_drift(const RunConfig& config) {
  if (!config.has_drift) fail(Errc::config_invalid, "this run needs a 'drift' block");
  DriftField b;
  b.time_constant = true;  // the config vocabulary is time-independent
  const auto raw = config.drift;
  if (config.drift_form == "fp_divergence") {
    b.eval = raw;
  } else {
    const DiffusionField a = config.diffusion;
    const double sign = config.drift_form == "fp_trace" ? 1.0 : -1.0;
    b.eval = [raw, a, sign](double t, VecRef x) {
      return Vec(sign * raw(t, x) + divergence_drift(a, x));
    };
  }
  return b;
}

}  // namespace mfg
