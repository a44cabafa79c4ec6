#include <doctest.h>

#include "fixtures.hpp"
#include "mfg/errors.hpp"
#include "mfg/mfg.hpp"

using namespace mfg;

namespace {

MFGConfig desk_config() {
  MFGConfig c;
  c.h = 1.0 / 32;
  c.dt = 1.0 / 128;  // CFL: the Example-1 drift speed is M + R + |tilde_b| <= 3
  c.theta = 0.5;
  c.tol = 1e-7;
  c.max_iters = 80;
  return c;
}

}  // namespace

TEST_CASE("decoupled problem converges immediately to hjb + fp composed") {
  fixtures::Viable1D fix;
  MFGProblem p;
  p.domain = fix.domain;
  p.a = fix.a;
  p.model = fixtures::inward_example1(fix.domain);
  p.F = zero_coupling_f();
  p.G = terminal_cost_coupling_g([](VecRef x) { return x[0] * (1.0 - x[0]); }, 1.0);
  p.m0 = [](VecRef) { return 1.0; };
  p.T = 0.5;
  MFGConfig c = desk_config();
  c.theta = 1.0;
  const MFGSolution sol = solve_mfg(p, c);
  CHECK(sol.converged);
  CHECK(sol.iterations <= 2);

  // compose by hand: one HJB solve, one FP solve
  Discretization disc = make_discretization(p.domain, c.h, p.T, c.dt);
  const SpaceTimeField F = make_field(disc.grid, disc.mask, p.T, c.dt);
  const Eigen::VectorXd G =
      sample_on_mask(disc.grid, disc.mask, [](VecRef x) { return x[0] * (1.0 - x[0]); });
  const SpaceTimeField u = solve_hjb(p.domain, disc, p.a, p.model, F, G, HJBParams{});
  GradientSampler du(u);
  Eigen::VectorXd m0v = sample_on_mask(disc.grid, disc.mask, p.m0);
  const DensityField m =
      solve_fp(p.domain, disc, p.a, mfg_drift(du, p.model, p.a), m0v, FPParams{});
  CHECK((sol.u.values - u.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((sol.m.values - m.values).cwiseAbs().maxCoeff() <= 10.0 * c.tol);
}

TEST_CASE("zero Hamiltonian short-circuits to the tilde-b flow") {
  fixtures::Viable1D fix;
  MFGProblem p;
  p.domain = fix.domain;
  p.a = fix.a;
  p.model = zero_hamiltonian(1);
  p.F = zero_coupling_f();
  p.G = zero_coupling_g();
  p.m0 = [](VecRef) { return 1.0; };
  p.T = 0.25;
  MFGConfig c = desk_config();
  c.theta = 1.0;
  const MFGSolution sol = solve_mfg(p, c);
  CHECK(sol.converged);
  CHECK(sol.u.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(sol.m.values.minCoeff() >= -1e-12);
}

TEST_CASE("monotone fixture: two starts meet, the gap is tiny, mass is exact") {
  // identical problem, two Picard starting guesses (uniform-in-time m0 vs a
  // one-sided bump profile): the monotone structure forces the same limit
  MFGProblem p = fixtures::monotone_problem();
  const MFGConfig c = desk_config();
  p.m0 = fixtures::unit_mass(p.domain, c.h, p.m0);
  const MFGSolution sol_a = solve_mfg(p, c);
  REQUIRE(sol_a.converged);

  MFGConfig cb = c;
  const auto bump = fixtures::bump_density();
  cb.initial_guess = [bump](double, VecRef x) { return bump(x); };
  const MFGSolution sol_b = solve_mfg(p, cb);
  REQUIRE(sol_b.converged);

  double dist = 0.0;
  for (int n = 0; n <= sol_a.m.n_steps; ++n)
    dist = std::max(dist, (sol_a.m.values.row(n) - sol_b.m.values.row(n)).cwiseAbs().sum() *
                              sol_a.m.grid.cell_volume());
  CHECK(dist <= 10.0 * c.tol);

  const GapTerms gap = duality_gap(sol_a, sol_b, p);
  CHECK(gap.g_term >= -1e-10);
  CHECK(gap.f_term >= -1e-10);
  CHECK(gap.bregman_1 >= -1e-10);
  CHECK(gap.bregman_2 >= -1e-10);
  const double f_sup = p.F.evaluate(sol_a.m).values.cwiseAbs().maxCoeff();
  const double scale = sol_a.m.mass_at(0) * f_sup * p.T;
  CHECK(gap.total() <= 1e-3 * scale);

  // the damped iteration contracts monotonically on this fixture
  const auto& res = sol_a.residual_history;
  for (std::size_t k = 1; k < res.size(); ++k) CHECK(res[k] <= res[k - 1]);

  // mass and positivity inherited from the fp module
  const auto mass = mass_trace(sol_a.m);
  for (double v : mass) CHECK(std::abs(v - mass.front()) <= 1e-10 * mass.front());
  CHECK(sol_a.m.values.minCoeff() >= -1e-12);

  // max principle along the iterated couplings
  const SpaceTimeField F_final = p.F.evaluate(sol_a.m);
  const Eigen::VectorXd G_final = p.G.evaluate(sol_a.m);
  CHECK(sol_a.u.values.cwiseAbs().maxCoeff() <=
        max_principle_bound(F_final, G_final, p.model) + 1e-8);
}

TEST_CASE("damping factor changes the path, not the limit") {
  const MFGProblem p = fixtures::monotone_problem(0.25);
  MFGConfig c = desk_config();
  c.h = 1.0 / 16;
  c.dt = 1.0 / 64;
  c.theta = 1.0;
  const MFGSolution full = solve_mfg(p, c);
  c.theta = 0.5;
  const MFGSolution damped = solve_mfg(p, c);
  REQUIRE(full.converged);
  REQUIRE(damped.converged);
  double dist = 0.0;
  for (int n = 0; n <= full.m.n_steps; ++n)
    dist = std::max(dist, (full.m.values.row(n) - damped.m.values.row(n)).cwiseAbs().sum() *
                              full.m.grid.cell_volume());
  CHECK(dist <= 10.0 * c.tol);
  CHECK(full.iterations != damped.iterations);
}

TEST_CASE("duality gap of a solution with itself vanishes") {
  const MFGProblem p = fixtures::monotone_problem(0.25);
  MFGConfig c = desk_config();
  c.h = 1.0 / 16;
  c.dt = 1.0 / 64;
  const MFGSolution sol = solve_mfg(p, c);
  const GapTerms gap = duality_gap(sol, sol, p);
  CHECK(gap.g_term == 0.0);
  CHECK(gap.f_term == 0.0);
  CHECK(gap.bregman_1 == 0.0);
  CHECK(gap.bregman_2 == 0.0);
  CHECK(sol.duality_gap >= -1e-8);
}

TEST_CASE("grid mismatch in the gap is refused") {
  const MFGProblem p = fixtures::monotone_problem(0.25);
  MFGConfig c1 = desk_config();
  c1.h = 1.0 / 16;
  c1.dt = 1.0 / 64;
  MFGConfig c2 = c1;
  c2.h = 1.0 / 8;
  const MFGSolution a = solve_mfg(p, c1);
  const MFGSolution b = solve_mfg(p, c2);
  CHECK_THROWS_AS(duality_gap(a, b, p), Error);
}

TEST_CASE("coercive cone-control model couples and certifies") {
  fixtures::Viable1D fix;
  MFGProblem p;
  p.domain = fix.domain;
  p.a = fix.a;
  p.model = example2_hamiltonian(1.5, 0.5, 2.0, 0.0, fix.domain);
  p.F = local_saturating_coupling_f(1.0);
  p.G = zero_coupling_g();
  p.m0 = [](VecRef) { return 1.0; };
  p.T = 0.25;
  MFGConfig c = desk_config();
  const MFGSolution sol = solve_mfg(p, c);
  CHECK(sol.converged);
  CHECK(sol.m.values.minCoeff() >= -1e-12);
  const auto mass = mass_trace(sol.m);
  for (double v : mass) CHECK(std::abs(v - mass.front()) <= 1e-10 * mass.front());
  CHECK(sol.duality_gap >= -1e-8);
  CHECK(sol.duality_gap <= 1e-4);
}

TEST_CASE("2D coupled solve on the square") {
  const DomainSpec square = make_box(Vec::Zero(2), Vec::Ones(2), 0.25);
  MFGProblem p;
  p.domain = square;
  p.a = wright_fisher_diffusion(Vec::Zero(2), Vec::Ones(2));
  p.model = fixtures::inward_example1(square);
  p.F = local_linear_coupling_f(1.0, 10.0);
  p.G = zero_coupling_g();
  p.m0 = [](VecRef) { return 1.0; };
  p.T = 0.25;
  MFGConfig c;
  c.h = 1.0 / 8;
  c.dt = 1.0 / 32;
  c.tol = 1e-6;
  c.max_iters = 80;
  const MFGSolution sol = solve_mfg(p, c);
  CHECK(sol.converged);
  const auto mass = mass_trace(sol.m);
  for (double v : mass) CHECK(std::abs(v - mass.front()) <= 1e-10 * mass.front());
  CHECK(sol.m.values.minCoeff() >= -1e-12);
  CHECK(sol.duality_gap >= -1e-8);
  CHECK(sol.duality_gap <= 1e-4);
  CHECK(sol.u.values.cwiseAbs().maxCoeff() <=
        max_principle_bound(p.F.evaluate(sol.m), p.G.evaluate(sol.m), p.model) + 1e-8);
}

TEST_CASE("boundary drift condition with the drift exactly cancelling tilde_b") {
  // Hp = -tilde_b makes (tilde_b + Hp).Dd vanish identically
  fixtures::Viable1D fix;
  const DiffusionField a = fix.a;
  MFGProblem p;
  p.domain = fix.domain;
  p.a = a;
  p.model = linear_drift_hamiltonian(
      [a](VecRef x) { return divergence_drift(a, x); }, 1.0);
  p.F = zero_coupling_f();
  p.G = zero_coupling_g();
  p.m0 = [](VecRef) { return 1.0; };
  p.T = 0.125;
  MFGConfig c;
  c.h = 1.0 / 16;
  c.dt = 1.0 / 64;
  c.theta = 1.0;
  const MFGSolution sol = solve_mfg(p, c);
  REQUIRE(sol.converged);
  CHECK(std::abs(sol.diagnostics.boundary_margin) <= 1e-12);
}

TEST_CASE("boundary drift condition: compliant fixture vs outward counterexample") {
  fixtures::Viable1D fix;
  MFGConfig c = desk_config();
  c.h = 1.0 / 16;
  c.dt = 1.0 / 64;
  c.tol = 1e-6;

  SUBCASE("strong inward push passes and m stays bounded under refinement") {
    const MFGProblem p = fixtures::monotone_problem(0.25);
    const MFGSolution sol = solve_mfg(p, c);
    const MBoundReport report = m_bound_check(sol, p, c, 0.15);
    CHECK(report.worst_margin <= 1e-10);
    CHECK(report.condition_holds);
    CHECK(report.growth_ratio < 1.10);
  }
  SUBCASE("outward drift fails the condition and m blows up under refinement") {
    // tilde_b + Hp = tilde_b = (1-2x): points outward at both ends, the
    // Wright-Fisher accumulation fixture
    MFGProblem p;
    p.domain = fix.domain;
    p.a = fix.a;
    p.model = zero_hamiltonian(1);
    p.F = zero_coupling_f();
    p.G = zero_coupling_g();
    p.m0 = [](VecRef) { return 1.0; };
    p.T = 0.25;
    const MFGSolution sol = solve_mfg(p, c);
    const MBoundReport report = m_bound_check(sol, p, c, 0.15);
    CHECK(report.worst_margin > 0.1);
    CHECK(!report.condition_holds);
    CHECK(report.growth_ratio >= 1.25);
  }
}
