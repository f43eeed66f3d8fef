#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mfregret/datastream.hpp"
#include "mfregret/errors.hpp"

using namespace mfregret;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> diffs(const std::vector<double>& v) {
  std::vector<double> d(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) d[i] = v[i + 1] - v[i];
  return d;
}

}  // namespace

TEST_CASE("euler_ou_path: deterministic cases") {
  Stream rng(1);
  const auto c = euler_ou_path(OuParams{0.0, 0.0, 0.0}, 2.5, 50, 0.1, rng);
  REQUIRE(c.size() == 50);
  for (double v : c) CHECK(v == 2.5);

  const auto one = euler_ou_path(OuParams{1.0, 0.0, 0.0}, 1.0, 1, 0.5, rng);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 0.5);

  CHECK_THROWS_AS(euler_ou_path(OuParams{1.0, 0.0, 1.0}, 0.0, 10, 0.0, rng), InputError);
  CHECK_THROWS_AS(euler_ou_path(OuParams{1.0, 0.0, 1.0}, 0.0, 10, -0.1, rng), InputError);
  CHECK_THROWS_AS(euler_ou_path(OuParams{-1.0, 0.0, 1.0}, 0.0, 10, 0.1, rng), InputError);
}

TEST_CASE("euler_ou_path: variance at step 1000 matches the AR(1) recursion") {
  const OuParams p{0.5, 0.0, 1.0};
  const double dt = 0.02;
  const double phi = 1.0 - p.rate * dt;
  const double target = p.vol * p.vol * dt / (1.0 - phi * phi);
  const int paths = 100000;
  long double s = 0, ss = 0;
  for (int i = 0; i < paths; ++i) {
    Stream rng(derive_key(21, "ou-var", {static_cast<std::uint64_t>(i)}));
    const double x = euler_ou_path(p, 0.0, 1000, dt, rng).back();
    s += x;
    ss += static_cast<long double>(x) * x;
  }
  const double mean = static_cast<double>(s / paths);
  const double var = static_cast<double>(ss / paths) - mean * mean;
  CHECK(std::abs(var / target - 1.0) < 0.05);
}

TEST_CASE("gen_periodic: frozen covariate and silent noise give the deterministic signal") {
  PeriodicConfig cfg;
  cfg.covariate = OuParams{0.0, 1.0, 0.0};
  cfg.noise = OuParams{1.5, 0.0, 0.0};
  const auto pair = gen_periodic(cfg, 5);
  for (const Trajectory* tr : {&pair.train, &pair.test}) {
    REQUIRE(tr->size() == 1000);
    for (std::size_t k = 1; k <= tr->size(); ++k) {
      CHECK(tr->x(k)[0] == 1.0);
      CHECK(tr->y(k) == doctest::Approx(std::sin(0.3 * tr->time(k))).epsilon(1e-15));
    }
  }
}

TEST_CASE("gen_periodic: truth channel and determinism") {
  const PeriodicConfig cfg;
  const auto a = gen_periodic(cfg, 77);
  const auto b = gen_periodic(cfg, 77);
  CHECK(a.train.xs == b.train.xs);
  CHECK(a.train.ys == b.train.ys);
  CHECK(a.test.ys == b.test.ys);
  CHECK(a.train.xs != a.test.xs);
  for (std::size_t k = 1; k <= a.train.size(); ++k) {
    CHECK(a.train.truth[k - 1] == std::sin(0.3 * a.train.time(k)) * a.train.x(k)[0]);
  }
  CHECK(a.train.time(1) == doctest::Approx(0.02));
  CHECK(a.train.horizon() == doctest::Approx(20.0));
  const auto c = gen_periodic(cfg, 78);
  CHECK(c.train.ys != a.train.ys);
}

TEST_CASE("train and test covariates are independent") {
  // The OU paths are strongly autocorrelated (phi = 0.99), so the sample
  // correlation of two independent paths has Bartlett sd
  // sqrt((1 + phi^2) / ((1 - phi^2) K)) ~ 0.315 rather than 1/sqrt(K).
  const double phi = 1.0 - 0.5 * 0.02;
  const double level_sd = std::sqrt((1 + phi * phi) / ((1 - phi * phi) * 1000.0));
  const double incr_sd = 1.0 / std::sqrt(999.0);
  double sum_level = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    const auto p = gen_periodic({}, 1000 + s);
    const double c = correlation(p.train.xs, p.test.xs);
    const double ci = correlation(diffs(p.train.xs), diffs(p.test.xs));
    CHECK(std::abs(c) < 4.0 * level_sd);
    CHECK(std::abs(ci) < 4.5 * incr_sd);
    sum_level += c;
  }
  CHECK(std::abs(sum_level / seeds) < 3.0 * level_sd / std::sqrt(static_cast<double>(seeds)));

  const auto p = gen_periodic({}, 4242);
  CHECK(std::abs(correlation(diffs(p.train.xs), diffs(p.test.xs))) < 0.1);
}

TEST_CASE("gen_nonlinear: zero ground-truth parameters leave pure noise") {
  NonlinearConfig cfg;
  cfg.phi_sd = 0.0;
  cfg.phi_vol = 0.0;
  const auto inst = gen_nonlinear(cfg, 9);
  double energy = 0.0;
  for (std::size_t k = 1; k <= inst.train.size(); ++k) {
    CHECK(inst.train.truth[k - 1] == 0.0);
    energy += inst.train.y(k) * inst.train.y(k);
  }
  CHECK(energy > 0.0);
}

TEST_CASE("gen_nonlinear: a single frozen neuron") {
  NonlinearConfig cfg;
  cfg.neurons = 1;
  cfg.phi_rate = 0.0;
  cfg.phi_vol = 0.0;
  const auto inst = gen_nonlinear(cfg, 10);
  const auto phi0 = inst.truth.phi(1, 0);
  const std::vector<double> phi(phi0.begin(), phi0.end());
  for (std::size_t k = 1; k <= inst.train.size(); ++k) {
    const auto pk = inst.truth.phi(k, 0);
    CHECK(std::equal(pk.begin(), pk.end(), phi.begin()));
    const double f = 2.5 * sigma(inst.train.x(k), Theta::unflatten(phi));
    CHECK(inst.train.truth[k - 1] == doctest::Approx(f).epsilon(1e-14));
  }
}

TEST_CASE("gen_nonlinear: shared drifting truth, independent observation streams") {
  const auto inst = gen_nonlinear({}, 31);
  REQUIRE(inst.train.n_inputs == 3);
  REQUIRE(inst.truth.neurons == 100);
  REQUIRE(inst.truth.dim == 5);
  CHECK(inst.train.xs != inst.test.xs);
  for (std::size_t k = 1; k <= inst.train.size(); k += 37) {
    CHECK(inst.train.truth[k - 1] == inst.truth.evaluate(k, inst.train.x(k)));
    CHECK(inst.test.truth[k - 1] == inst.truth.evaluate(k, inst.test.x(k)));
  }
  // Same covariate, same time: both streams see the same signal.
  const auto again = gen_nonlinear({}, 31);
  CHECK(again.truth.phi_path == inst.truth.phi_path);
  CHECK(again.test.ys == inst.test.ys);
}

TEST_CASE("trajectory CSV round-trip and header") {
  const auto inst = gen_nonlinear({}, 3);
  CHECK(trajectory_csv_header(3) == "k,t,x1,x2,x3,y,truth");
  std::stringstream ss;
  write_trajectory_csv(ss, inst.train);
  std::string first;
  std::getline(std::stringstream(ss.str()), first);
  CHECK(first == "k,t,x1,x2,x3,y,truth");
  const auto back = read_trajectory_csv(ss);
  CHECK(back.xs == inst.train.xs);
  CHECK(back.ys == inst.train.ys);
  CHECK(back.truth == inst.train.truth);
  CHECK(back.dt == doctest::Approx(inst.train.dt).epsilon(1e-15));

  std::stringstream bad("k,t,x1,y,truth\n1,0.02,abc,1,\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), InputError);
}

TEST_CASE("config validation") {
  PeriodicConfig p;
  p.dt = 0.0;
  CHECK_THROWS_AS(gen_periodic(p, 1), InputError);
  NonlinearConfig n;
  n.neurons = 0;
  CHECK_THROWS_AS(gen_nonlinear(n, 1), InputError);
}
