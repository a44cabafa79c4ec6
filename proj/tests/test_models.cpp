#include <doctest.h>

#include "fixtures.hpp"
#include "mfg/errors.hpp"
#include "mfg/models.hpp"

using namespace mfg;

namespace {

Vec pt(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

// Dense grid-search oracle for sup over the control set of
// -b(x,alpha).p - L(x,alpha); independent of the closed-form maximizers.
double grid_search_ball(const Vec& p, const Vec& m_dd, double radius, int n) {
  double best = -1e300;
  if (p.size() == 1) {
    for (int i = 0; i <= n; ++i) {
      const double a = -radius + 2.0 * radius * i / n;
      best = std::max(best, -a * p[0] - m_dd[0] * p[0] - 0.5 * a * a);
    }
  } else {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        Vec a = pt({-radius + 2.0 * radius * i / n, -radius + 2.0 * radius * j / n});
        if (a.norm() > radius) continue;
        best = std::max(best, -a.dot(p) - m_dd.dot(p) - 0.5 * a.squaredNorm());
      }
  }
  return best;
}

double grid_search_cone(const Vec& p, const Vec& dd, double M, double eta, double q, double a_max,
                        int n) {
  double best = -1e300;
  if (p.size() == 1) {
    for (int i = 0; i <= n; ++i) {
      const double a = a_max * i / n;
      best = std::max(best, -(M * dd[0] + dd[0] * a) * p[0] - eta * std::pow(a, q));
    }
  } else {
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        Vec a = pt({a_max * static_cast<double>(i) / n, a_max * static_cast<double>(j) / n});
        Vec b = M * dd + (dd.array() * a.array()).matrix();
        best = std::max(best, -b.dot(p) - eta * std::pow(a.norm(), q));
      }
  }
  return best;
}

}  // namespace

TEST_CASE("bounded-control Hamiltonian closed form") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  const HamiltonianModel model =
      example1_hamiltonian(0.0, 1.0, RunningCost::quadratic_cost(), domain);
  const Vec x = pt({0.5});
  // |p| = 0.5 interior maximum: H = |p|^2/2
  CHECK(model.H(0, x, pt({0.5})) == doctest::Approx(0.125).epsilon(1e-12));
  // |p| = 2 boundary maximizer: H = |p| - 1/2
  CHECK(model.H(0, x, pt({2.0})) == doctest::Approx(1.5).epsilon(1e-12));
  // p = 0, L >= 0 with L(0) = 0: zero-control optimum
  CHECK(model.H(0, x, pt({0.0})) == doctest::Approx(0.0));
}

TEST_CASE("bounded-control Hamiltonian matches the grid-search oracle") {
  const DomainSpec domain = make_box(pt({0, 0}), pt({1, 1}), 0.25);
  const double M = 1.2, R = 0.7;
  const HamiltonianModel model =
      example1_hamiltonian(M, R, RunningCost::quadratic_cost(), domain);
  const int n = 400;
  for (const Vec& x : {pt({0.5, 0.5}), pt({0.1, 0.4}), pt({0.8, 0.9})}) {
    const Vec dd = signed_distance(domain, x).grad;
    for (const Vec& p : {pt({0.3, -0.2}), pt({2.0, 1.0}), pt({0.0, 0.0}), pt({-5.0, 3.0})}) {
      const double oracle = grid_search_ball(p, M * dd, R, n);
      CHECK(model.H(0, x, p) == doctest::Approx(oracle).epsilon(0).scale(1).epsilon(1e-8 + 4.0 * R / n));
    }
  }
  // |Hp| <= M + R everywhere
  for (const Vec& p : {pt({100.0, -40.0}), pt({0.01, 0.0})})
    CHECK(model.Hp(0, pt({0.3, 0.3}), p).norm() <= M + R + 1e-12);
}

TEST_CASE("custom running cost goes through projected gradient ascent") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  RunningCost quartic;
  quartic.L = [](VecRef, VecRef a) { return 0.25 * std::pow(a.squaredNorm(), 2) + 0.5 * a.squaredNorm(); };
  const HamiltonianModel model = example1_hamiltonian(0.0, 1.0, quartic, domain);
  const Vec x = pt({0.5});
  // oracle by dense search over alpha in [-1, 1]
  for (double pv : {0.3, 1.0, -2.0}) {
    double best = -1e300;
    for (int i = 0; i <= 4000; ++i) {
      const double a = -1.0 + 2.0 * i / 4000.0;
      best = std::max(best, -a * pv - 0.25 * a * a * a * a - 0.5 * a * a);
    }
    CHECK(model.H(0, x, pt({pv})) == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("non-convex running cost is rejected") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  RunningCost bad;
  bad.L = [](VecRef, VecRef a) { return -a.squaredNorm(); };
  CHECK_THROWS_AS(example1_hamiltonian(0.0, 1.0, bad, domain), Error);
}

TEST_CASE("cone-control Hamiltonian closed form and oracle") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  const HamiltonianModel model = example2_hamiltonian(0.0, 0.5, 2.0, 0.0, domain);
  const Vec x = pt({0.2});  // Dd = +1 here
  // p = 0: coercive L minimized at 0
  CHECK(model.H(0, x, pt({0.0})) == doctest::Approx(0.0));
  // p = -1: maximize a - a^2/2 over a >= 0 -> a* = 1, H = 1/2
  CHECK(model.H(0, x, pt({-1.0})) == doctest::Approx(0.5).epsilon(1e-12));
  // p = +1: the cone constraint forces a* = 0
  CHECK(model.H(0, x, pt({1.0})) == doctest::Approx(0.0));

  const HamiltonianModel model2d =
      example2_hamiltonian(0.8, 0.5, 2.0, 0.0, make_box(pt({0, 0}), pt({1, 1}), 0.25));
  const DomainSpec sq = make_box(pt({0, 0}), pt({1, 1}), 0.25);
  for (const Vec& xx : {pt({0.1, 0.5}), pt({0.7, 0.2})}) {
    const Vec dd = signed_distance(sq, xx).grad;
    for (const Vec& p : {pt({-1.0, 0.5}), pt({2.0, -2.0}), pt({0.0, -0.3})}) {
      const double oracle = grid_search_cone(p, dd, 0.8, 0.5, 2.0, 8.0, 1600);
      CHECK(model2d.H(0, xx, p) == doctest::Approx(oracle).epsilon(1e-4));
    }
  }
}

TEST_CASE("cone-control growth guard") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  CHECK_THROWS_AS(example2_hamiltonian(1.0, 0.5, 1.5, 0.0, domain, true), Error);
  CHECK_NOTHROW(example2_hamiltonian(1.0, 0.5, 1.5, 0.0, domain, false));
  const HamiltonianModel m = example2_hamiltonian(1.0, 0.5, 3.0, 0.0, domain);
  CHECK(m.growth.q_conj == doctest::Approx(1.5));
}

TEST_CASE("truncation clamps H and zeroes Hp at the clamp") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  HamiltonianModel base = quadratic_hamiltonian(1);
  const HamiltonianModel trunc = truncate_hamiltonian(base, 0.1);
  const Vec x = pt({0.5});
  CHECK(trunc.H(0, x, pt({std::sqrt(10.0)})) == doctest::Approx(5.0));   // inside the band
  CHECK(trunc.H(0, x, pt({std::sqrt(40.0)})) == doctest::Approx(10.0));  // upper clamp
  HamiltonianModel neg = linear_drift_hamiltonian([](VecRef) { return Vec(Vec::Ones(1)); }, 1.0);
  const HamiltonianModel tneg = truncate_hamiltonian(neg, 0.1);
  CHECK(tneg.H(0, x, pt({20.0})) == doctest::Approx(-10.0));  // lower clamp
  CHECK(tneg.Hp(0, x, pt({20.0})).norm() == 0.0);
  CHECK(trunc.Hp(0, x, pt({1.0}))[0] == doctest::Approx(1.0));  // untouched inside
}

TEST_CASE("divergence drift") {
  CHECK(divergence_drift(constant_diffusion(Mat::Identity(2, 2)), pt({0.3, 0.4})).norm() == 0.0);
  const DiffusionField wf1 = wright_fisher_diffusion(Vec::Zero(1), Vec::Ones(1));
  CHECK(divergence_drift(wf1, pt({0.3}))[0] == doctest::Approx(0.4));  // 1 - 2x
  const DiffusionField wf2 = wright_fisher_diffusion(Vec::Zero(2), Vec::Ones(2));
  const Vec b = divergence_drift(wf2, pt({0.3, 0.8}));
  CHECK(b[0] == doctest::Approx(0.4));
  CHECK(b[1] == doctest::Approx(-0.6));
  // finite-difference fallback agrees with the analytic divergence
  DiffusionField no_analytic = wf2;
  no_analytic.div_a = nullptr;
  const Vec b_fd = divergence_drift(no_analytic, pt({0.3, 0.8}));
  CHECK((b - b_fd).norm() <= 1e-7);
}

TEST_CASE("Bregman gap is nonnegative and exact for quadratic H") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  const HamiltonianModel quad = quadratic_hamiltonian(1);
  const Vec x = pt({0.5});
  for (double pv : {-2.0, 0.0, 1.5})
    for (double qv : {-1.0, 0.7, 3.0}) {
      const double e = bregman_gap(quad, 0, x, pt({qv}), pt({pv}));
      CHECK(e == doctest::Approx(0.5 * (qv - pv) * (qv - pv)).epsilon(1e-12));
    }
  const HamiltonianModel ex1 = fixtures::inward_example1(domain);
  const HamiltonianModel ex2 = example2_hamiltonian(1.0, 0.5, 2.0, 0.0, domain);
  for (const HamiltonianModel* m : {&ex1, &ex2})
    for (double pv : {-3.0, -0.4, 0.0, 0.4, 3.0})
      for (double qv : {-2.0, 0.1, 2.0})
        CHECK(bregman_gap(*m, 0, pt({0.3}), pt({qv}), pt({pv})) >= -1e-10);
}

TEST_CASE("Hp matches finite differences of H in p") {
  const DomainSpec domain = make_box(pt({0, 0}), pt({1, 1}), 0.25);
  const HamiltonianModel ex1 = fixtures::inward_example1(domain, 1.0, 0.6);
  const HamiltonianModel ex2 = example2_hamiltonian(0.7, 0.5, 2.0, 0.0, domain);
  const double h = 1e-5;
  for (const HamiltonianModel* m : {&ex1, &ex2})
    for (const Vec& x : {pt({0.3, 0.6}), pt({0.85, 0.2})})
      for (const Vec& p : {pt({0.4, -0.7}), pt({-1.2, 0.9})}) {
        Vec fd(2), pp = p, pm = p;
        for (int k = 0; k < 2; ++k) {
          pp[k] = p[k] + h;
          pm[k] = p[k] - h;
          fd[k] = (m->H(0, x, pp) - m->H(0, x, pm)) / (2 * h);
          pp[k] = p[k];
          pm[k] = p[k];
        }
        CHECK((m->Hp(0, x, p) - fd).norm() <= 10 * h * h + 1e-7);
      }
}

TEST_CASE("structure report flags quadratic-growth violations") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  const DiffusionField a = wright_fisher_diffusion(Vec::Zero(1), Vec::Ones(1));
  const StructureSamples samples = default_structure_samples(domain, 1.0);

  const StructureReport ok = check_structure(quadratic_hamiltonian(1), a, samples);
  CHECK(ok.all_pass());

  HamiltonianModel cubic;
  cubic.H = [](double, VecRef, VecRef p) { return std::pow(p.norm(), 3.0); };
  cubic.Hp = [](double, VecRef, VecRef p) {
    return Vec(3.0 * p.norm() * p);
  };
  cubic.h0_bound = 0.0;
  const StructureReport bad = check_structure(cubic, a, samples);
  bool quadgrow_failed = false;
  for (const auto& c : bad.checks)
    if (c.condition == "quadgrow" && !c.pass) quadgrow_failed = true;
  CHECK(quadgrow_failed);

  // Example-1 model passes with the bounded envelope
  const StructureReport ex1 = check_structure(fixtures::inward_example1(domain), a, samples);
  CHECK(ex1.all_pass());
}

TEST_CASE("diffusion field invariants") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  const DiffusionField wf = wright_fisher_diffusion(Vec::Zero(1), Vec::Ones(1));
  // a = sigma sigma^T at sample points
  for (double xv : {0.1, 0.5, 0.9}) {
    const Vec x = pt({xv});
    const Mat s = wf.sigma(x);
    CHECK((wf.a(x) - s * s.transpose()).norm() <= 1e-12);
  }
  // sampled ellipticity shrinks toward the boundary-degenerate limit
  const double lam4 = wf.ellipticity(domain, 4.0);
  const double lam16 = wf.ellipticity(domain, 16.0);
  CHECK(lam4 > 0.0);
  CHECK(lam16 > 0.0);
  CHECK(lam16 <= lam4);
}

TEST_CASE("couplings evaluate as declared") {
  const DomainSpec domain = make_interval(0.0, 1.0, 0.25);
  GridMasks gm = grid_masks(domain, 0.125, 0.0, 0.25);
  DensityField m;
  static_cast<SpaceTimeField&>(m) = make_field(gm.grid, gm.interior, 1.0, 0.5);
  m.values.setConstant(2.0);

  const SpaceTimeField f = fixtures::monotone_problem().F.evaluate(m);
  CHECK(f.values.minCoeff() == doctest::Approx(2.0));

  const CouplingF sat = local_saturating_coupling_f(3.0);
  CHECK(sat.evaluate(m).values.maxCoeff() <= 3.0);

  const CouplingG g = terminal_cost_coupling_g([](VecRef x) { return x[0]; }, 1.0);
  const Eigen::VectorXd gv = g.evaluate(m);
  CHECK(gv[0] == doctest::Approx(gm.grid.center(gm.interior.cells[0])[0]));

  // convolution of a uniform density is near-constant away from edges
  const CouplingF conv = convolution_coupling_f(1.0, 0.3, 1);
  const SpaceTimeField fc = conv.evaluate(m);
  CHECK(fc.values.maxCoeff() > 0.0);
}
