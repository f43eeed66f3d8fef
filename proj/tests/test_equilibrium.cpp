#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "mfregret/equilibrium.hpp"
#include "mfregret/errors.hpp"
#include "mfregret/rng.hpp"

using namespace mfregret;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> gaussian_density(const QuadratureGrid& g, double mean, double sd) {
  std::vector<double> rho(g.points);
  for (std::size_t i = 0; i < g.points; ++i) {
    const double t = (g.node(i) - mean) / sd;
    rho[i] = std::exp(-0.5 * t * t) / (sd * std::sqrt(2 * kPi));
  }
  return rho;
}

void normalize(std::vector<double>& rho, const QuadratureGrid& g) {
  const double z = simpson(rho, g.spacing());
  for (double& v : rho) v /= z;
}

// mu* times a random smooth positive factor.
std::vector<double> perturb(const std::vector<double>& mu, const QuadratureGrid& g, Stream& rng) {
  const double a1 = 0.8 * (2 * rng.uniform() - 1), a2 = 0.5 * (2 * rng.uniform() - 1);
  const double f1 = 0.5 + 3 * rng.uniform(), f2 = 0.5 + 3 * rng.uniform();
  const double shift = 2 * rng.uniform() - 1;
  std::vector<double> rho(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double t = g.node(i);
    rho[i] = mu[i] * std::exp(a1 * std::sin(f1 * t + shift) + a2 * std::cos(f2 * t) + 0.3 * shift * t);
  }
  normalize(rho, g);
  return rho;
}

}  // namespace

TEST_CASE("phi_hat special cases") {
  const std::vector<double> same(50, 0.37);
  CHECK(phi_hat(-3.0, same, 0.2, 0.02) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(phi_hat(5.0, same, 0.2, 0.02) == doctest::Approx(0.37).epsilon(1e-15));

  Stream rng(derive_key(51, "phi"));
  std::vector<double> s(1000);
  for (double& v : s) v = std::tanh(rng.normal());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  CHECK(phi_hat(0.4, s, 0.4, 0.02) == doctest::Approx(mean).epsilon(1e-13));
  CHECK(std::abs(phi_hat(0.9, s, -0.3, 1e9) - mean) < 1e-6);
  CHECK_THROWS_AS(phi_hat(0.0, std::vector<double>{}, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(phi_hat(0.0, s, 0.0, 0.0), InputError);
}

TEST_CASE("phi_hat is nonincreasing in m") {
  Stream rng(derive_key(52, "mono"));
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> s(200);
    for (double& v : s) v = 2 * std::tanh(rng.normal());
    double m1 = 3 * rng.normal(), m2 = 3 * rng.normal();
    if (m1 > m2) std::swap(m1, m2);
    const double y = rng.normal(), beta = 0.005 + rng.uniform();
    CHECK(phi_hat(m1, s, y, beta) >= phi_hat(m2, s, y, beta) - 1e-12);
  }
}

TEST_CASE("gibbs weights survive extreme exponents") {
  const std::vector<double> s{-1.0, 0.0, 1.0};
  const auto w = gibbs_weights(s, 50.0, 0.0, 1e-3);  // exponents of order 1e5
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  CHECK(w[0] == doctest::Approx(1.0));
  for (double v : w) CHECK(std::isfinite(v));
  CHECK(effective_sample_size(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(4.0));
}

TEST_CASE("solve_fixed_point: constant sigma and the flat limit") {
  const std::vector<double> same(20, -0.6);
  const auto r = solve_fixed_point(same, 0.3, 0.02, {});
  CHECK(r.m_star == doctest::Approx(-0.6).epsilon(1e-10));

  Stream rng(derive_key(53, "flat"));
  std::vector<double> s(5000);
  for (double& v : s) v = std::tanh(0.8 * rng.normal() + 0.2);
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  const auto flat = solve_fixed_point(s, 0.5, 1e9, {});
  CHECK(std::abs(flat.m_star - mean) < 1e-6);
  CHECK(flat.ess == doctest::Approx(5000.0).epsilon(1e-6));
  CHECK_FALSE(flat.low_ess);

  const auto tight = solve_fixed_point(s, 0.5, 0.02, {});
  CHECK(tight.residual <= 1e-10);
  CHECK(std::abs(phi_hat(tight.m_star, s, 0.5, 0.02) - tight.m_star) <= 1e-10);
}

TEST_CASE("solve_fixed_point: shifting sigma and y together shifts the root") {
  Stream rng(derive_key(54, "shift"));
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(300);
    for (double& v : s) v = std::tanh(rng.normal());
    const double y = 0.5 * rng.normal(), c = rng.normal();
    std::vector<double> shifted = s;
    for (double& v : shifted) v += c;
    const auto base = solve_fixed_point(s, y, 0.05, {});
    const auto moved = solve_fixed_point(shifted, y + c, 0.05, {});
    CHECK(std::abs(moved.m_star - (base.m_star + c)) < 1e-8);
  }
}

TEST_CASE("solve_fixed_point flags low effective sample size") {
  std::vector<double> s(100, 0.0);
  s[0] = 1.0;
  IsSolverConfig cfg;
  const auto r = solve_fixed_point(s, 5.0, 1e-3, cfg);  // y far above: the single large sample dominates
  CHECK(r.low_ess);
  CHECK(r.ess < 10.0);
}

TEST_CASE("solve_mu_star returns the weighted measure at the root") {
  const std::size_t dim = 3;
  const auto samples = draw_prior_samples(4000, dim, 0.2, 7);
  const MeasureView v{samples, dim, {}};
  const DataPoint z{{0.8}, 0.3};
  const auto mu = solve_mu_star(v, z, 0.02, {});
  CHECK(predict(mu.measure.view(), z.x) == doctest::Approx(mu.m_star).epsilon(1e-9));
  CHECK(mu.measure.size() == 4000);
  CHECK(mu.ess > 1.0);
}

TEST_CASE("draw_prior_samples variance") {
  const auto s = draw_prior_samples(200000, 1, 0.2, 3);
  double ss = 0;
  for (double v : s) ss += v * v;
  CHECK(std::abs(ss / s.size() / 0.2 - 1.0) < 0.02);
  CHECK(draw_prior_samples(10, 2, 0.2, 3) == draw_prior_samples(10, 2, 0.2, 3));
}

TEST_CASE("simpson is exact on cubics and normalizes the mu* density") {
  const QuadratureGrid g{-1.0, 2.0, 31};
  std::vector<double> f(g.points);
  for (std::size_t i = 0; i < g.points; ++i) {
    const double t = g.node(i);
    f[i] = 2 * t * t * t - t + 3;
  }
  // integral of 2t^3 - t + 3 over [-1, 2] = (16 - 1)/2 - (4 - 1)/2 + 9 = 15.
  CHECK(simpson(f, g.spacing()) == doctest::Approx(15.0).epsilon(1e-13));
  CHECK_THROWS_AS(simpson(std::vector<double>{1, 2}, 0.1), InputError);
  CHECK_THROWS_AS(QuadratureGrid({0, 1, 4}).validate(), InputError);

  const auto mu = solve_mu_star_quadrature({}, DataPoint{{1.2}, 0.4}, 0.02, 0.1);
  CHECK(std::abs(simpson(mu.density, QuadratureGrid{}.spacing()) - 1.0) < 1e-10);
  for (double v : mu.density) CHECK(v > 0.0);
}

TEST_CASE("quadrature mu*: symmetric case and grid refinement") {
  const auto sym = solve_mu_star_quadrature({}, DataPoint{{1.0}, 0.0}, 0.3, 0.5);
  CHECK(std::abs(sym.m_star) < 1e-12);

  const DataPoint z{{1.3}, 0.45};
  const auto coarse = solve_mu_star_quadrature({-6, 6, 2001}, z, 0.02, 0.1);
  const auto fine = solve_mu_star_quadrature({-6, 6, 4001}, z, 0.02, 0.1);
  CHECK(std::abs(coarse.m_star - fine.m_star) < 1e-9);
}

TEST_CASE("quadrature mu*: a grid that clips the density is rejected") {
  CHECK_THROWS_AS(solve_mu_star_quadrature({-0.5, 0.5, 201}, DataPoint{{1.0}, 0.2}, 0.02, 0.1),
                  SolverError);
  CHECK_THROWS_AS(solve_mu_star_quadrature({}, DataPoint{{1.0, 2.0}, 0.2}, 0.02, 0.1), InputError);
}

TEST_CASE("quadrature free energy closed forms") {
  const QuadratureGrid uni{-1.0, 1.0, 2001};
  const std::vector<double> flat(uni.points, 0.5);
  // sigma = tanh(0 * theta) = 0.
  CHECK(quadrature_free_energy(flat, uni, DataPoint{{0.0}, 0.0}, 0.3, 0.0) ==
        doctest::Approx(0.3 * std::log(0.5)).epsilon(1e-12));

  const QuadratureGrid wide{-12.0, 12.0, 4001};
  const double s = 1.3, beta = 0.7;
  const auto rho = gaussian_density(wide, 0.0, s);
  const double entropy_term = beta * (-0.5 * std::log(2 * kPi * s * s) - 0.5);
  CHECK(std::abs(quadrature_free_energy(rho, wide, DataPoint{{0.0}, 0.0}, beta, 0.0) - entropy_term) < 1e-6);
  const double with_penalty = quadrature_free_energy(rho, wide, DataPoint{{0.0}, 0.0}, beta, 0.4);
  CHECK(std::abs(with_penalty - entropy_term - 0.2 * s * s) < 1e-6);

  std::vector<double> bad = flat;
  bad[3] = -1e-3;
  CHECK_THROWS_AS(quadrature_free_energy(bad, uni, DataPoint{{0.0}, 0.0}, 0.3, 0.0), InputError);
  std::vector<double> heavy(uni.points, 0.6);
  CHECK_THROWS_AS(quadrature_free_energy(heavy, uni, DataPoint{{0.0}, 0.0}, 0.3, 0.0), InputError);
}

TEST_CASE("gap decomposition: mu* itself, the prior, and random perturbations") {
  const QuadratureGrid g;
  const double beta = 0.02, lambda = 0.1;
  const DataPoint z{{1.1}, 0.35};
  const auto mu = solve_mu_star_quadrature(g, z, beta, lambda);
  const auto self = verify_gap_decomposition(mu.density, g, z, beta, lambda);
  CHECK(std::abs(self.lhs) < 1e-9);
  CHECK(std::abs(self.rhs) < 1e-9);

  const auto prior = gaussian_density(g, 0.0, std::sqrt(beta / lambda));
  const auto pg = verify_gap_decomposition(prior, g, z, beta, lambda);
  CHECK(pg.error <= 1e-6);
  CHECK(pg.lhs >= 0.0);

  Stream rng(derive_key(55, "gap"));
  for (int rep = 0; rep < 20; ++rep) {
    const DataPoint zr{{0.3 + 1.5 * rng.uniform()}, rng.uniform() - 0.5};
    const auto m = solve_mu_star_quadrature(g, zr, beta, lambda);
    const auto rho = perturb(m.density, g, rng);
    const auto gc = verify_gap_decomposition(rho, g, zr, beta, lambda);
    CHECK(gc.error <= 1e-6);
    CHECK(gc.lhs >= 0.0);
    CHECK(gc.kl >= -1e-8);
  }
}

TEST_CASE("derivative of m* in y") {
  const auto zero_var = verify_dym_formula(DataPoint{{0.0}, 0.3}, 0.02, 0.1, 1e-4);
  CHECK(zero_var.analytic == 0.0);
  CHECK(std::abs(zero_var.finite_diff) < 1e-12);

  const auto hot = verify_dym_formula(DataPoint{{1.0}, 0.1}, 1e6, 1e5, 1e-4, {-40, 40, 8001});
  CHECK(std::abs(hot.analytic) < 1e-5);

  Stream rng(derive_key(56, "dym"));
  for (int rep = 0; rep < 10; ++rep) {
    const DataPoint z{{0.3 + 1.5 * rng.uniform()}, rng.uniform() - 0.5};
    const auto c = verify_dym_formula(z, 0.02, 0.1, 1e-4);
    CHECK(c.error <= 1e-4);
    CHECK(c.analytic > 0.0);
    CHECK(c.analytic < 1.0);
  }
}

TEST_CASE("importance sampling agrees with quadrature in one dimension") {
  const QuadratureGrid g;
  const double beta = 0.02, lambda = 0.1;
  Stream rng(derive_key(57, "is-vs-quad"));
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const double x = 0.3 + 1.5 * rng.uniform(), y = rng.uniform() - 0.5;
    const auto theta = draw_prior_samples(200000, 1, beta / lambda, 900 + rep);
    std::vector<double> s(theta.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = scalar_sigma(x, theta[i]);
    const auto is = solve_fixed_point(s, y, beta, {});
    const auto quad = solve_mu_star_quadrature(g, DataPoint{{x}, y}, beta, lambda);
    CHECK(std::abs(is.m_star - quad.m_star) <= 3e-3);
  }
}

TEST_CASE("rho*: a single time point reduces to mu*") {
  const auto theta = draw_prior_samples(5000, 3, 0.2, 8);
  const MeasureView v{theta, 3, {}};
  Trajectory t;
  t.dt = 0.02;
  t.n_inputs = 1;
  t.xs = {0.9};
  t.ys = {0.25};
  RhoStarConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iters = 5000;
  const auto rho = solve_rho_star(t, v, 0.05, cfg);
  IsSolverConfig is;
  is.root_tol = 1e-13;
  const auto mu = solve_mu_star(v, t.point(1), 0.05, is);
  CHECK(std::abs(rho.u[0] - mu.m_star) < 1e-9);
}

TEST_CASE("rho*: antisymmetric problem stays at zero") {
  auto half = draw_prior_samples(2000, 3, 0.2, 9);
  // Flipping the output weight a flips sigma, so the sample set is odd.
  std::vector<double> theta = half;
  for (std::size_t i = 0; i < half.size(); i += 3) {
    theta.insert(theta.end(), {-half[i], half[i + 1], half[i + 2]});
  }
  Trajectory t;
  t.dt = 0.02;
  t.n_inputs = 1;
  for (int k = 0; k < 50; ++k) t.xs.push_back(std::sin(0.3 * k));
  t.ys.assign(50, 0.0);
  const auto rho = solve_rho_star(t, MeasureView{theta, 3, {}}, 0.02, {});
  for (double u : rho.u) CHECK(std::abs(u) < 1e-12);
  CHECK(rho.iterations == 0);
}

TEST_CASE("rho*: reports non-convergence with a residual trace") {
  const auto inst = gen_nonlinear({}, 4);
  const auto theta = draw_prior_samples(2000, 5, 0.2, 10);
  RhoStarConfig cfg;
  cfg.max_iters = 2;
  cfg.tol = 1e-14;
  try {
    solve_rho_star(inst.train, MeasureView{theta, 5, {}}, 0.02, cfg);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residuals().size() == 3);
  }
  CHECK_THROWS_AS(RhoStarConfig({0.0, 1e-6, 10}).validate(), InputError);
}

TEST_CASE("rho*: converges on the nonlinear defaults") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto inst = gen_nonlinear({}, 100 + s);
    const auto theta = draw_prior_samples(20000, 5, 0.2, s);
    const auto sol = solve_rho_star(inst.train, MeasureView{theta, 5, {}}, 0.02, {});
    MESSAGE("seed " << s << ": " << sol.iterations << " iterations, " << sol.step_halvings
                    << " step halvings, residual " << sol.residual);
    CHECK(sol.residual <= 1e-6);
    CHECK(sol.iterations <= 500);
    // The measure is the image of the final iterate, so it reproduces u to within the residual.
    CHECK(std::abs(predict(sol.measure.view(), inst.train.x(500)) - sol.u[499]) <= 1e-6);
  }
}
