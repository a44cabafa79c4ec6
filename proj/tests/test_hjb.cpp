#include <doctest.h>

#include "fixtures.hpp"
#include "mfg/errors.hpp"
#include "mfg/hjb.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {

SpaceTimeField zero_source(const Discretization& disc) {
  return make_field(disc.grid, disc.mask, disc.T, disc.dt);
}

}  // namespace

TEST_CASE("constants solve the zero-flux problem exactly") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 16, 1.0, 1.0 / 32);
  const HamiltonianModel zero = zero_hamiltonian(1);
  const Eigen::VectorXd G = Eigen::VectorXd::Constant(disc.mask.size(), 3.5);
  const SpaceTimeField u =
      solve_hjb(fix.domain, disc, fix.a, zero, zero_source(disc), G, HJBParams{});
  CHECK((u.values.array() - 3.5).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("H = 0, F = 1, G = 0 integrates to u = T - t exactly") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 16, 1.0, 1.0 / 32);
  SpaceTimeField F = zero_source(disc);
  F.values.setConstant(1.0);
  const Eigen::VectorXd G = Eigen::VectorXd::Zero(disc.mask.size());
  const SpaceTimeField u =
      solve_hjb(fix.domain, disc, fix.a, zero_hamiltonian(1), F, G, HJBParams{});
  for (int n = 0; n <= disc.n_steps; ++n) {
    const double expected = disc.T - disc.time_of(n);
    CHECK(std::abs(u.values(n, 0) - expected) <= 1e-10);
    CHECK(std::abs(u.values(n, disc.mask.size() - 1) - expected) <= 1e-10);
  }
  CHECK(u.values.cwiseAbs().maxCoeff() <=
        max_principle_bound(F, G, zero_hamiltonian(1)) + 1e-10);
}

TEST_CASE("quadratic-Hamiltonian fixture matches the global Newton oracle") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 16, 0.5, 1.0 / 32);
  const HamiltonianModel quad = quadratic_hamiltonian(1);
  const SpaceTimeField F = zero_source(disc);
  const Eigen::VectorXd G =
      sample_on_mask(disc.grid, disc.mask, [](VecRef x) { return x[0]; });
  const HJBParams params;
  const SpaceTimeField u = solve_hjb(fix.domain, disc, fix.a, quad, F, G, params);
  oracles::HJBSystem oracle(fix.domain, disc, fix.a, quad, F, G, params);
  CHECK(oracle.sup_distance(u) <= 1e-8);
}

TEST_CASE("max principle bound arithmetic") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 8, 0.5, 1.0 / 16);
  SpaceTimeField F = zero_source(disc);
  F.values.setConstant(2.0);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(disc.mask.size(), 1.0);
  const HamiltonianModel ex1 = fixtures::inward_example1(fix.domain);
  CHECK(max_principle_bound(F, G, ex1) == doctest::Approx(1.0 + 0.5 * 2.0));
  G.setConstant(-4.0);
  F.values.setZero();
  CHECK(max_principle_bound(F, G, zero_hamiltonian(1)) == doctest::Approx(4.0));
}

TEST_CASE("discrete comparison principle and constant shift") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 32, 0.5, 1.0 / 256);
  const HamiltonianModel quad = quadratic_hamiltonian(1);
  SpaceTimeField F1 = zero_source(disc);
  SpaceTimeField F2 = zero_source(disc);
  F2.values.setConstant(0.3);
  const Eigen::VectorXd G1 =
      sample_on_mask(disc.grid, disc.mask, [](VecRef x) { return std::sin(3.0 * x[0]); });
  const Eigen::VectorXd G2 = G1.array() + 0.2;
  const HJBParams params;
  const SpaceTimeField u1 = solve_hjb(fix.domain, disc, fix.a, quad, F1, G1, params);
  const SpaceTimeField u2 = solve_hjb(fix.domain, disc, fix.a, quad, F2, G2, params);
  CHECK((u2.values - u1.values).minCoeff() >= -1e-10);  // G1<=G2, F1<=F2 -> u1<=u2

  // constant invariance: shifting G shifts u by the same constant
  const SpaceTimeField u3 = solve_hjb(fix.domain, disc, fix.a, quad, F1,
                                      Eigen::VectorXd(G1.array() + 1.7), params);
  CHECK(((u3.values - u1.values).array() - 1.7).abs().maxCoeff() <= 1e-10);

  // same ordering through the bounded-control model, whose upwind switches
  // differ between the two solves
  const HamiltonianModel ex1 = fixtures::inward_example1(fix.domain);
  const SpaceTimeField v1 = solve_hjb(fix.domain, disc, fix.a, ex1, F1, G1, params);
  const SpaceTimeField v2 = solve_hjb(fix.domain, disc, fix.a, ex1, F2, G2, params);
  CHECK((v2.values - v1.values).minCoeff() >= -1e-10);
}

TEST_CASE("max principle holds on the Example-1 fixture") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 32, 0.5, 1.0 / 128);
  const HamiltonianModel ex1 = fixtures::inward_example1(fix.domain);
  const SpaceTimeField F = sample_field(disc.grid, disc.mask, disc.T, disc.dt,
                                        [](double, VecRef x) { return std::cos(M_PI * x[0]); });
  const Eigen::VectorXd G =
      sample_on_mask(disc.grid, disc.mask, [](VecRef x) { return x[0] * (1.0 - x[0]); });
  const SpaceTimeField u = solve_hjb(fix.domain, disc, fix.a, ex1, F, G, HJBParams{});
  CHECK(u.values.cwiseAbs().maxCoeff() <= max_principle_bound(F, G, ex1) + 1e-8);
}

TEST_CASE("lipschitz and semiconcavity estimators on closed forms") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 32, 0.5, 1.0 / 32);
  SUBCASE("constants have zero estimates") {
    SpaceTimeField u = zero_source(disc);
    u.values.setConstant(2.0);
    CHECK(lipschitz_estimate(u, 0.0, disc.dist) == doctest::Approx(0.0));
    CHECK(semiconcavity_estimate(u, default_offsets(1)) == doctest::Approx(0.0));
  }
  SUBCASE("u = x has unit gradient") {
    const SpaceTimeField u = sample_field(disc.grid, disc.mask, disc.T, disc.dt,
                                          [](double, VecRef x) { return x[0]; });
    CHECK(lipschitz_estimate(u, 0.0, disc.dist) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("u = -x^2 has second difference -2") {
    const SpaceTimeField u = sample_field(disc.grid, disc.mask, disc.T, disc.dt,
                                          [](double, VecRef x) { return -x[0] * x[0]; });
    CHECK(semiconcavity_estimate(u, default_offsets(1)) == doctest::Approx(-2.0).epsilon(1e-9));
  }
  SUBCASE("kink |x - 1/2| blows up like 1/h under refinement") {
    // the kink sits on a cell face, so the worst second difference is
    // (3h/2 + h/2 - 2 h/2) / h^2 = 1/h at the two adjacent cells
    auto kink = [](double, VecRef x) { return std::abs(x[0] - 0.5); };
    const SpaceTimeField u = sample_field(disc.grid, disc.mask, disc.T, disc.dt, kink);
    const double est = semiconcavity_estimate(u, default_offsets(1));
    CHECK(est == doctest::Approx(1.0 / disc.grid.h).epsilon(1e-9));
    const Discretization fine = make_discretization(fix.domain, 1.0 / 64, 0.5, 1.0 / 32);
    const SpaceTimeField uf = sample_field(fine.grid, fine.mask, fine.T, fine.dt, kink);
    CHECK(semiconcavity_estimate(uf, default_offsets(1)) >= 1.5 * est);
  }
}

TEST_CASE("2D square: Newton oracle, comparison and max principle") {
  const DomainSpec square = make_box(Vec::Zero(2), Vec::Ones(2), 0.25);
  const DiffusionField a = wright_fisher_diffusion(Vec::Zero(2), Vec::Ones(2));
  const Discretization disc = make_discretization(square, 1.0 / 8, 0.25, 1.0 / 32);
  const HamiltonianModel quad = quadratic_hamiltonian(2);
  const SpaceTimeField F = make_field(disc.grid, disc.mask, disc.T, disc.dt);
  const Eigen::VectorXd G = sample_on_mask(
      disc.grid, disc.mask, [](VecRef x) { return 0.5 * x[0] + x[1] * (1.0 - x[1]); });
  const HJBParams params;
  const SpaceTimeField u = solve_hjb(square, disc, a, quad, F, G, params);
  oracles::HJBSystem oracle(square, disc, a, quad, F, G, params);
  CHECK(oracle.sup_distance(u) <= 1e-8);
  CHECK(u.values.cwiseAbs().maxCoeff() <= max_principle_bound(F, G, quad) + 1e-8);

  const SpaceTimeField u_shift = solve_hjb(square, disc, a, quad, F,
                                           Eigen::VectorXd(G.array() + 0.9), params);
  CHECK(((u_shift.values - u.values).array() - 0.9).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("CFL guard raises on violent Hamiltonians") {
  fixtures::Viable1D fix;
  const Discretization disc = make_discretization(fix.domain, 1.0 / 16, 0.5, 1.0 / 8);
  const HamiltonianModel fast =
      linear_drift_hamiltonian([](VecRef) { return Vec(Vec::Constant(1, 10.0)); }, 10.0);
  const SpaceTimeField F = zero_source(disc);
  const Eigen::VectorXd G =
      sample_on_mask(disc.grid, disc.mask, [](VecRef x) { return x[0]; });
  CHECK_THROWS_AS(solve_hjb(fix.domain, disc, fix.a, fast, F, G, HJBParams{}), Error);
  HJBParams no_guard;
  no_guard.cfl_guard = false;
  CHECK_NOTHROW(solve_hjb(fix.domain, disc, fix.a, fast, F, G, no_guard));
}

TEST_CASE("epsilon continuation: penalized diffs shrink, trivial case is flat") {
  fixtures::Viable1D fix;
  SUBCASE("constant solution gives zero diffs") {
    auto F = [](double, VecRef) { return 0.0; };
    auto G = [](VecRef) { return 2.0; };
    const auto entries =
        epsilon_continuation(fix.domain, fix.a, zero_hamiltonian(1), F, G, 1.0 / 16, 0.5,
                             1.0 / 32, {0.1, 0.05, 0.025}, ContinuationMode::penalized, 0.1);
    for (std::size_t i = 1; i < entries.size(); ++i)
      CHECK(entries[i].diff <= 1e-12);
  }
  SUBCASE("penalized sequence is Cauchy on the quadratic fixture") {
    auto F = [](double, VecRef) { return 0.0; };
    auto G = [](VecRef x) { return x[0]; };
    const auto entries = epsilon_continuation(
        fix.domain, fix.a, quadratic_hamiltonian(1), F, G, 1.0 / 32, 0.5, 1.0 / 64,
        {0.2, 0.1, 0.05, 0.025}, ContinuationMode::penalized, 0.05);
    REQUIRE(entries.size() == 4);
    CHECK(entries[1].diff > entries[2].diff);
    CHECK(entries[2].diff > entries[3].diff);
  }
  SUBCASE("shrunk masks nest and compare on the coarser mask") {
    auto F = [](double, VecRef) { return 0.0; };
    auto G = [](VecRef x) { return x[0]; };
    const auto entries =
        epsilon_continuation(fix.domain, fix.a, quadratic_hamiltonian(1), F, G, 1.0 / 32, 0.5,
                             1.0 / 64, {0.2, 0.1}, ContinuationMode::shrunk, 0.0);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].u.mask.size() < entries[1].u.mask.size());
    CHECK(entries[1].diff < 1.0);  // finite, computed on the coarse mask only
  }
}
