#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <limits>
#include <vector>

#include "mfregret/datastream.hpp"

#include "doctest.h"
#include "mfregret/errors.hpp"
#include "mfregret/onpgd.hpp"

using namespace mfregret;

namespace {

OnpgdConfig deterministic(std::size_t particles) {
  OnpgdConfig c;
  c.particles = particles;
  c.beta = 0.0;
  c.init_sd = 0.0;
  return c;
}

Trajectory constant_zero_trajectory(std::size_t steps, std::size_t n) {
  Trajectory t;
  t.dt = 0.02;
  t.n_inputs = n;
  t.xs.assign(steps * n, 0.5);
  t.ys.assign(steps, 0.0);
  return t;
}

}  // namespace

TEST_CASE("init_ensemble draws from the Gaussian prior") {
  OnpgdConfig cfg;
  cfg.particles = 100000;
  cfg.lambda = 0.1;
  cfg.beta = 0.02;
  cfg.init_sd.reset();
  const auto ens = init_ensemble(cfg, 1, 123);
  REQUIRE(ens.dim() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      const double v = ens.theta(i)[j];
      s += v;
      ss += v * v;
    }
    const double n = static_cast<double>(ens.size());
    const double var = ss / n - (s / n) * (s / n);
    CHECK(std::abs(var / 0.2 - 1.0) < 0.02);
  }
  CHECK(init_ensemble(cfg, 1, 123) == ens);
  CHECK(!(init_ensemble(cfg, 1, 124) == ens));
}

TEST_CASE("init_ensemble: explicit sd and missing prior") {
  OnpgdConfig cfg;
  cfg.particles = 10;
  cfg.init_sd = 0.0;
  const auto ens = init_ensemble(cfg, 2, 1);
  for (double v : ens.params()) CHECK(v == 0.0);

  OnpgdConfig flat;
  flat.lambda = 0.0;
  flat.init_sd.reset();
  CHECK_THROWS_AS(init_ensemble(flat, 2, 1), InputError);
  flat.init_sd = 0.3;
  CHECK_NOTHROW(init_ensemble(flat, 2, 1));
}

TEST_CASE("step: origin is a fixed point without noise") {
  const auto cfg = deterministic(5);
  ParticleEnsemble ens(5, 3);
  step(ens, DataPoint{{0.7}, 0.0}, cfg, 9);
  for (double v : ens.params()) CHECK(v == 0.0);
  step(ens, DataPoint{{0.7}, 1.0}, cfg, 9);  // gradient vanishes at the origin
  for (double v : ens.params()) CHECK(v == 0.0);
  CHECK(ens.step() == 2);
}

TEST_CASE("step: single particle matches a hand-computed Euler step") {
  auto cfg = deterministic(1);
  cfg.lambda = 0.1;
  cfg.dt = 0.02;
  const double a = 0.8, w = -0.5, b = 0.3, x = 1.7, y = 0.25;
  ParticleEnsemble ens(3, {a, w, b});
  step(ens, DataPoint{{x}, y}, cfg, 0);

  const long double u = static_cast<long double>(w) * x + b;
  const long double t = std::tanh(u);
  const long double m = a * t;
  const long double e = 2.0L * (m - y);
  const long double s2 = 1.0L - t * t;
  const long double ga = t, gw = a * s2 * x, gb = a * s2;
  const long double dt = 0.02L, lam = 0.1L;
  CHECK(std::abs(ens.theta(0)[0] - static_cast<double>(a + (-lam * a - e * ga) * dt)) < 1e-12);
  CHECK(std::abs(ens.theta(0)[1] - static_cast<double>(w + (-lam * w - e * gw) * dt)) < 1e-12);
  CHECK(std::abs(ens.theta(0)[2] - static_cast<double>(b + (-lam * b - e * gb) * dt)) < 1e-12);
}

TEST_CASE("step: explicit noise enters with scale sqrt(2 beta dt)") {
  OnpgdConfig cfg;
  cfg.particles = 2;
  cfg.lambda = 0.0;
  cfg.beta = 0.5;
  cfg.dt = 0.02;
  ParticleEnsemble ens(2, 3);
  const std::vector<double> noise{1, 2, 3, -1, -2, -3};
  step(ens, DataPoint{{0.0}, 0.0}, cfg, std::span<const double>(noise));
  const double s = std::sqrt(2 * 0.5 * 0.02);
  for (std::size_t j = 0; j < 6; ++j) CHECK(ens.params()[j] == doctest::Approx(s * noise[j]).epsilon(1e-15));
}

TEST_CASE("noise variance of a zero-drift step is 2 beta dt") {
  OnpgdConfig cfg;
  cfg.particles = 1;
  cfg.lambda = 0.0;
  cfg.beta = 0.02;
  cfg.dt = 0.02;
  const int reps = 100000;
  double s = 0, ss = 0;
  for (int r = 0; r < reps; ++r) {
    ParticleEnsemble ens(1, 3);  // a = 0: sigma and its a-gradient vanish at y = 0
    step(ens, DataPoint{{0.4}, 0.0}, cfg, static_cast<std::uint64_t>(r));
    for (double v : ens.params()) {
      s += v;
      ss += v * v;
    }
  }
  const double n = 3.0 * reps;
  const double var = ss / n - (s / n) * (s / n);
  CHECK(std::abs(var / (2 * 0.02 * 0.02) - 1.0) < 0.02);
}

TEST_CASE("pure confinement decays the second moment by (1 - lambda dt)^2 per step") {
  auto cfg = deterministic(4);
  cfg.lambda = 0.3;
  cfg.dt = 0.05;
  // a = 0 switches the data term off entirely when y = 0.
  ParticleEnsemble ens(3, std::vector<double>{0, 1, 2, 0, -3, 0.5, 0, 0.25, 4, 0, -1, -1});
  const double factor = (1 - cfg.lambda * cfg.dt) * (1 - cfg.lambda * cfg.dt);
  double m2 = second_moment(ens.view());
  std::vector<double> prev(ens.params().begin(), ens.params().end());
  for (int k = 0; k < 200; ++k) {
    step(ens, DataPoint{{1.3}, 0.0}, cfg, 0);
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const double expect = prev[j] * (1 - cfg.lambda * cfg.dt);
      CHECK(std::abs(ens.params()[j] - expect) <= 2 * std::numeric_limits<double>::epsilon() * std::abs(expect));
      prev[j] = ens.params()[j];
    }
    const double next = second_moment(ens.view());
    CHECK(std::abs(next - factor * m2) <= 4 * std::numeric_limits<double>::epsilon() * m2);
    m2 = next;
  }
}

TEST_CASE("permutation equivariance") {
  OnpgdConfig cfg;
  cfg.particles = 6;
  const auto ens0 = init_ensemble(cfg, 2, 5);
  const std::size_t d = ens0.dim();
  std::vector<double> noise(6 * d);
  draw_step_noise(77, 1, 6, d, noise);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  const DataPoint z{{0.4, -1.1}, 0.3};

  auto stepped = ens0;
  step(stepped, z, cfg, std::span<const double>(noise));

  std::vector<double> pp(6 * d), pn(6 * d);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      pp[i * d + j] = ens0.theta(perm[i])[j];
      pn[i * d + j] = noise[perm[i] * d + j];
    }
  }
  ParticleEnsemble permuted(d, pp);
  step(permuted, z, cfg, std::span<const double>(pn));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(permuted.theta(i)[j] == doctest::Approx(stepped.theta(perm[i])[j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("leave-one-out interaction agrees with the full mean for identical particles") {
  OnpgdConfig on;
  on.particles = 5;
  OnpgdConfig off = on;
  off.self_interaction = false;
  std::vector<double> flat;
  for (int i = 0; i < 5; ++i) flat.insert(flat.end(), {0.6, -0.2, 0.9, 0.1});
  ParticleEnsemble a(4, flat), b(4, flat);
  const DataPoint z{{0.5, 1.5}, -0.4};
  step(a, z, on, 31);
  step(b, z, off, 31);
  for (std::size_t j = 0; j < a.params().size(); ++j) {
    CHECK(a.params()[j] == doctest::Approx(b.params()[j]).epsilon(1e-14));
  }

  off.particles = 1;
  CHECK_THROWS_AS(off.validate(), InputError);
}

TEST_CASE("blow-up names particle and step") {
  auto cfg = deterministic(3);
  cfg.lambda = 1e10;
  cfg.dt = 1.0;
  ParticleEnsemble ens(3, {0, 0, 0, 1e300, 0, 0, 0, 0, 0});
  try {
    step(ens, DataPoint{{0.0}, 0.0}, cfg, 0);
    FAIL("expected a blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.particle() == 1);
    CHECK(e.step() == 1);
  }
}

TEST_CASE("run_online snapshots") {
  const auto traj = constant_zero_trajectory(50, 1);
  const auto cfg = deterministic(4);
  const auto two = run_online(traj, cfg, 1, 50);
  REQUIRE(two.size() == 2);
  CHECK(two[0].step == 0);
  CHECK(two[1].step == 50);
  CHECK(std::equal(two[0].ensemble.params().begin(), two[0].ensemble.params().end(),
                   two[1].ensemble.params().begin()));

  const auto all = run_online(traj, cfg, 1, 10);
  REQUIRE(all.size() == 6);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].step == 10 * i);
    for (double v : all[i].ensemble.params()) CHECK(v == 0.0);
  }

  const auto odd = run_online(traj, cfg, 1, 7);
  CHECK(odd.back().step == 50);
  CHECK(odd[odd.size() - 2].step == 49);
}

TEST_CASE("online predictor at t_k has consumed exactly k-1 points") {
  const auto inst = gen_nonlinear({}, 2);
  OnpgdConfig cfg;
  const auto preds = online_predictions(inst.train, inst.test, cfg, 4);
  const auto snaps = run_online(inst.train, cfg, 4, 1);
  REQUIRE(snaps.size() == inst.train.size() + 1);
  for (std::size_t k = 1; k <= inst.test.size(); k += 97) {
    CHECK(preds[k - 1] == predict(snaps[k - 1].ensemble.view(), inst.test.x(k)));
  }
}

TEST_CASE("no blow-up on the nonlinear defaults") {
  OnpgdConfig cfg;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto inst = gen_nonlinear({}, 500 + s);
    double worst = 0.0;
    run_online_observed(inst.train, cfg, s, [&](std::size_t, const ParticleEnsemble& ens) {
      for (double v : ens.params()) worst = std::max(worst, std::abs(v));
    });
    CHECK(worst < 50.0);
  }
}

TEST_CASE("run_online is reproducible and seed-sensitive") {
  const auto inst = gen_periodic({}, 8);
  OnpgdConfig cfg;
  const auto a = run_online(inst.train, cfg, 3, 250);
  const auto b = run_online(inst.train, cfg, 3, 250);
  const auto c = run_online(inst.train, cfg, 4, 250);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].ensemble == b[i].ensemble);
  CHECK(!(a.back().ensemble == c.back().ensemble));
}

TEST_CASE("snapshot CSV layout") {
  const auto traj = constant_zero_trajectory(4, 2);
  const auto snaps = run_online(traj, deterministic(2), 1, 4);
  std::ostringstream out;
  write_snapshots_csv(out, snaps);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,particle_id,a,w1,w2,b");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}
