#include "nehari/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nehari;
using namespace nehari::oracle;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

VectorXcd real_random(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_CASE("brute force on the quartic toy finds t = 1, w = 0") {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  const ToyFiber fiber = make_toy_fiber(make_toy(ev, 3.0, 1.0, MatrixXd::Identity(2, 2)));
  VectorXcd v = VectorXcd::Zero(2);
  v[fiber.model->index_plus.front()] = 1.0;

  GridSpec grid;  // [0,3] x [-3,3], final step 1e-3
  const BruteForceResult res = brute_force_halfspace_max(fiber, v, grid);
  CHECK(std::abs(res.t - 1.0) <= 1e-3);
  CHECK(res.w.cwiseAbs().maxCoeff() <= 1e-3);
  CHECK(res.e2 == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("brute force: weighted quartic ray equation t = 2 t^3") {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  const ToyFiber fiber = make_toy_fiber(make_toy(ev, 3.0, 2.0, MatrixXd::Identity(2, 2)));
  VectorXcd v = VectorXcd::Zero(2);
  v[fiber.model->index_plus.front()] = 1.0;
  const BruteForceResult res = brute_force_halfspace_max(fiber, v, GridSpec{});
  CHECK(std::abs(res.t - std::pow(2.0, -0.5)) <= 1e-3);
}

TEST_CASE("brute force rejects an unbounded slice (zero coupling)") {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  const ToyFiber fiber = make_toy_fiber(make_toy(ev, 3.0, 0.0, MatrixXd::Identity(2, 2)));
  VectorXcd v = VectorXcd::Zero(2);
  v[fiber.model->index_plus.front()] = 1.0;
  CHECK_THROWS_WITH_AS(brute_force_halfspace_max(fiber, v, GridSpec{}),
                       doctest::Contains("boundary"), OracleError);
}

TEST_CASE("brute force is deterministic") {
  const ToyFiber fiber = make_toy_fiber(random_toy(41));
  const VectorXcd v = real_random(fiber.model->dim, 42);
  GridSpec grid;
  grid.t_max = 8.0;
  grid.w_max = 6.0;
  const BruteForceResult a = brute_force_halfspace_max(fiber, v, grid);
  const BruteForceResult b = brute_force_halfspace_max(fiber, v, grid);
  CHECK(a.t == b.t);
  CHECK((a.w - b.w).norm() == 0.0);
  CHECK(a.e2 == b.e2);
}

TEST_CASE("oracle/solver agreement over random toys") {
  GridSpec grid;
  grid.t_max = 12.0;
  grid.w_max = 9.0;
  for (int rep = 0; rep < 20; ++rep) {
    const ToyFiber fiber = make_toy_fiber(random_toy(1000 + rep));
    const VectorXcd v = real_random(fiber.model->dim, 2000 + rep);

    const BruteForceResult bf = brute_force_halfspace_max(fiber, v, grid);
    reduction::MaximizerOptions opts;
    const reduction::MaximizerResult mx = reduction::maximize_on_halfspace(fiber.fp, v, opts);
    REQUIRE(mx.converged);
    const double dist = reduction::detail::vnorm(*fiber.model, mx.g - bf.g);
    INFO("toy ", rep, " dim=", fiber.model->dim, " dist=", dist);
    CHECK(dist <= 10.0 * grid.step);
  }
}

TEST_CASE("fd_gradient basics") {
  auto quad = [](const VectorXd& x) { return 0.5 * 3.7 * x[0] * x[0]; };
  VectorXd at(1);
  at << 1.0;
  const VectorXd g = fd_gradient(quad, at, 1e-5);
  CHECK(g[0] == doctest::Approx(3.7).epsilon(1e-9));

  CHECK_THROWS_AS(fd_gradient(quad, at, 1e-9), OracleError);
  CHECK_THROWS_AS(fd_gradient(quad, at, 0.1), OracleError);

  auto bad = [](const VectorXd& x) { return std::sqrt(x[0] - 10.0); };
  CHECK_THROWS_AS(fd_gradient(bad, at, 1e-5), OracleError);
}

TEST_CASE("scalar ground state closed forms") {
  const ScalarGroundState gs = scalar_ground_state_oracle(0.5, 1.0, 3.0);
  CHECK(gs.t_star == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(gs.e_star == doctest::Approx(std::numbers::pi / 8.0).epsilon(1e-15));

  // the closed form agrees with an independent 1-d maximization of the
  // circle-integrated ray energy
  auto ray_energy = [](double t) {
    return std::numbers::pi * 0.5 * t * t -
           2.0 * std::numbers::pi * std::pow(t, 4.0) / 4.0;
  };
  // location accuracy is flatness-limited near the maximum
  const double t_num = golden_section_max(ray_energy, 0.0, 4.0);
  CHECK(t_num == doctest::Approx(gs.t_star).epsilon(1e-6));
  CHECK(ray_energy(t_num) == doctest::Approx(gs.e_star).epsilon(1e-12));

  // lambda = b gives t = 1 for every exponent
  CHECK(scalar_ground_state_oracle(0.7, 0.7, 2.2).t_star == doctest::Approx(1.0));
  CHECK(scalar_ground_state_oracle(1.3, 1.3, 4.0).t_star == doctest::Approx(1.0));

  // exponent limit guard: t_star moves monotonically away from 1
  const double above1 = scalar_ground_state_oracle(2.0, 1.0, 1.5).t_star;
  const double above2 = scalar_ground_state_oracle(2.0, 1.0, 1.2).t_star;
  const double above3 = scalar_ground_state_oracle(2.0, 1.0, 1.05).t_star;
  CHECK(above1 < above2);
  CHECK(above2 < above3);
  const double below1 = scalar_ground_state_oracle(0.5, 1.0, 1.5).t_star;
  const double below2 = scalar_ground_state_oracle(0.5, 1.0, 1.2).t_star;
  CHECK(below1 > below2);
  CHECK(below2 > 0.0);

  CHECK_THROWS_AS(scalar_ground_state_oracle(-1.0, 1.0, 3.0), OracleError);
}

TEST_CASE("invariant suite: trivial and corrupted points") {
  // anisotropic weight so the constraint point has a genuine minus part
  VectorXd ev(4);
  ev << -1.5, -0.8, 0.9, 1.4;
  MatrixXd w = MatrixXd::Identity(4, 4);
  w(0, 2) = w(2, 0) = 0.45;
  w(1, 3) = w(3, 1) = 0.3;
  const ToyFiber fiber = make_toy_fiber(make_toy(ev, 3.0, 1.0, w));

  const reduction::MaximizerResult mx = reduction::maximize_on_halfspace(
      fiber.fp, real_random(4, 11), reduction::MaximizerOptions{});
  REQUIRE(mx.converged);
  REQUIRE(reduction::detail::vnorm(*fiber.model, mx.w_minus) > 1e-4);

  const auto good = invariant_suite(fiber.fp, mx.g, 1e-8, toy_f_bar(fiber));
  CHECK(all_pass(good));

  // the trivial point fails constraint membership (v+ = 0)
  const auto trivial = invariant_suite(fiber.fp, VectorXcd::Zero(4), 1e-8, toy_f_bar(fiber));
  CHECK(!all_pass(trivial));
  bool plus_check_failed = false;
  for (const auto& c : trivial)
    if (c.name == "plus_part_nonzero" && !c.pass) plus_check_failed = true;
  CHECK(plus_check_failed);

  // scaling the minus part by 10 breaks the minus-pairing identity
  VectorXcd corrupted = mx.g;
  for (int i : fiber.model->index_minus) corrupted[i] *= 10.0;
  const auto bad = invariant_suite(fiber.fp, corrupted, 1e-8, toy_f_bar(fiber));
  bool identity_failed = false;
  for (const auto& c : bad)
    if (c.name == "minus_pairing_identity" && !c.pass) identity_failed = true;
  CHECK(identity_failed);
}

TEST_CASE("toy construction guards") {
  VectorXd all_plus(2);
  all_plus << 0.5, 1.0;
  CHECK_THROWS_AS(make_toy(all_plus, 3.0, 1.0, MatrixXd::Identity(2, 2)), OracleError);
  VectorXd ok(2);
  ok << -1.0, 1.0;
  CHECK_THROWS_AS(make_toy(ok, 0.9, 1.0, MatrixXd::Identity(2, 2)), OracleError);
  CHECK_THROWS_AS(make_toy(ok, 3.0, 1.0, MatrixXd::Identity(3, 3)), OracleError);
}
