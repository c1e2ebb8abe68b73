#include "nehari/reduction.hpp"

#include "nehari/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nehari;
using oracle::make_toy;
using oracle::make_toy_fiber;
using oracle::ToyContext;
using oracle::ToyFiber;
using reduction::MaximizerOptions;
using reduction::MaximizerResult;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

ToyFiber quartic_toy() {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  return make_toy_fiber(make_toy(ev, 3.0, 1.0, MatrixXd::Identity(2, 2)));
}

VectorXcd unit_plus(const ToyFiber& fiber) {
  VectorXcd v = VectorXcd::Zero(fiber.model->dim);
  v[fiber.model->index_plus.front()] = 1.0;
  return v;
}

VectorXcd random_complex(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::complex<double>(g(rng), g(rng));
  return v;
}

}  // namespace

TEST_CASE("e2_energy closed forms") {
  const ToyFiber fiber = quartic_toy();

  CHECK(reduction::e2_energy(fiber.fp, VectorXcd::Zero(2)) == 0.0);

  // t times a unit positive eigenvector: 1/2 lambda t^2 - t^{p+1}/(p+1)
  const double t = 0.8;
  VectorXcd v = t * unit_plus(fiber);
  CHECK(reduction::e2_energy(fiber.fp, v) ==
        doctest::Approx(0.5 * t * t - std::pow(t, 4.0) / 4.0).epsilon(1e-14));

  // random vector: spectral identity plus direct b
  VectorXd ev(5);
  ev << -2.0, -0.5, 0.7, 1.1, 2.5;
  MatrixXd w = MatrixXd::Identity(5, 5);
  w(0, 3) = w(3, 0) = 0.2;
  const ToyFiber f5 = make_toy_fiber(make_toy(ev, 2.5, 0.9, w));
  const VectorXcd r = random_complex(5, 17);
  spectral::SplitVector sv(r, *f5.model);
  const double expect = 0.5 * (spectral::v_norm_squared(sv.plus()) -
                               spectral::v_norm_squared(sv.minus())) -
                        f5.fp.b_value(r);
  CHECK(reduction::e2_energy(f5.fp, r) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("maximizer on the quartic toy: ray solution t = t^3") {
  const ToyFiber fiber = quartic_toy();
  MaximizerOptions opts;

  const MaximizerResult res =
      reduction::maximize_on_halfspace(fiber.fp, unit_plus(fiber), opts);
  CHECK(res.converged);
  CHECK(res.t == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(reduction::detail::vnorm(*fiber.model, res.w_minus) <= 1e-9);
  CHECK(res.e2 == doctest::Approx(0.25).epsilon(1e-10));

  // result depends only on the ray of v+
  VectorXcd mixed = unit_plus(fiber);
  mixed[fiber.model->index_minus.front()] = 0.7;
  const MaximizerResult res2 = reduction::maximize_on_halfspace(fiber.fp, mixed, opts);
  CHECK(reduction::detail::vnorm(*fiber.model, res2.g - res.g) <= 1e-8);

  VectorXcd scaled = 3.2 * unit_plus(fiber);
  scaled[fiber.model->index_minus.front()] = -0.4;
  const MaximizerResult res3 = reduction::maximize_on_halfspace(fiber.fp, scaled, opts);
  CHECK(reduction::detail::vnorm(*fiber.model, res3.g - res.g) <= 1e-8);
}

TEST_CASE("weighted quartic: ray equation t = 2 t^3") {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  const ToyFiber fiber = make_toy_fiber(make_toy(ev, 3.0, 2.0, MatrixXd::Identity(2, 2)));
  const MaximizerResult res =
      reduction::maximize_on_halfspace(fiber.fp, unit_plus(fiber), MaximizerOptions{});
  CHECK(res.converged);
  CHECK(res.t == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-9));
}

TEST_CASE("maximizer is idempotent: a Nehari point returns unchanged") {
  VectorXd ev(4);
  ev << -1.4, -0.6, 0.8, 1.7;
  MatrixXd w = MatrixXd::Identity(4, 4);
  w(0, 2) = w(2, 0) = 0.35;
  w(1, 3) = w(3, 1) = -0.2;
  const ToyFiber fiber = make_toy_fiber(make_toy(ev, 2.5, 1.0, w));

  const VectorXcd start = random_complex(4, 5);
  const MaximizerResult first =
      reduction::maximize_on_halfspace(fiber.fp, start, MaximizerOptions{});
  REQUIRE(first.converged);
  const MaximizerResult again =
      reduction::maximize_on_halfspace(fiber.fp, first.g, MaximizerOptions{});
  CHECK(again.converged);
  CHECK(again.t == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(reduction::detail::vnorm(*fiber.model, again.g - first.g) <= 1e-8);
}

TEST_CASE("nehari residuals") {
  const ToyFiber fiber = quartic_toy();

  const auto zero = reduction::nehari_residuals(fiber.fp, VectorXcd::Zero(2));
  CHECK(zero.r_scalar == 0.0);
  CHECK(zero.r_minus == 0.0);

  const MaximizerResult res =
      reduction::maximize_on_halfspace(fiber.fp, unit_plus(fiber), MaximizerOptions{});
  const auto r = reduction::nehari_residuals(fiber.fp, res.g);
  CHECK(std::abs(r.r_scalar) <= 1e-10);
  CHECK(r.r_minus <= 1e-10);
}

TEST_CASE("H- degenerate input is rejected") {
  const ToyFiber fiber = quartic_toy();
  VectorXcd v = VectorXcd::Zero(2);
  v[fiber.model->index_minus.front()] = 1.0;
  CHECK_THROWS_AS(reduction::maximize_on_halfspace(fiber.fp, v, MaximizerOptions{}),
                  reduction::ReductionError);
}

TEST_CASE("multistart agreement over random toys") {
  for (int rep = 0; rep < 20; ++rep) {
    const ToyFiber fiber = make_toy_fiber(oracle::random_toy(300 + rep));
    const VectorXcd v = random_complex(fiber.model->dim, 900 + rep);
    MaximizerOptions opts;
    opts.num_starts = 10;
    opts.seed = 40 + rep;
    const MaximizerResult res = reduction::maximize_on_halfspace(fiber.fp, v, opts);
    CHECK(res.converged);
    CHECK(res.multistart_spread <= 1e-6);
    CHECK(res.e2 > 0.0);
  }
}

TEST_CASE("accepted points satisfy the Nehari-point inequalities") {
  for (int rep = 0; rep < 20; ++rep) {
    const ToyFiber fiber = make_toy_fiber(oracle::random_toy(500 + rep));
    const VectorXcd v = random_complex(fiber.model->dim, 700 + rep);
    const MaximizerResult res =
        reduction::maximize_on_halfspace(fiber.fp, v, MaximizerOptions{});
    REQUIRE(res.converged);
    const auto checks =
        oracle::invariant_suite(fiber.fp, res.g, 1e-8, oracle::toy_f_bar(fiber));
    for (const auto& c : checks) {
      INFO(c.name, " value=", c.value, " threshold=", c.threshold);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("reduced energy: closed form, ray invariance, lower bound") {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  ToyContext ctx(make_toy(ev, 3.0, 1.0, MatrixXd::Identity(2, 2)));
  const std::monostate u{};
  MaximizerOptions opts;

  const VectorXcd vp = unit_plus(ctx.holder());
  CHECK(reduction::reduced_energy(ctx, u, vp, opts) == doctest::Approx(0.25).epsilon(1e-10));

  VectorXcd other = 3.0 * vp;
  other[ctx.holder().model->index_minus.front()] = -0.2;
  CHECK(reduction::reduced_energy(ctx, u, other, opts) ==
        doctest::Approx(reduction::reduced_energy(ctx, u, vp, opts)).epsilon(1e-8));

  // E2 at the maximizer is strictly positive, so reduced >= e1 = 0
  CHECK(reduction::reduced_energy(ctx, u, vp, opts) > 0.0);
}

TEST_CASE("reduced gradient: t-ratio and finite differences") {
  VectorXd ev(4);
  ev << -1.2, -0.5, 0.9, 1.6;
  MatrixXd w = MatrixXd::Identity(4, 4);
  w(0, 2) = w(2, 0) = 0.3;
  ToyContext ctx(make_toy(ev, 2.5, 1.0, w));
  const std::monostate u{};
  MaximizerOptions opts;
  opts.tol = 1e-12;

  // a point already on the constraint set reproduces itself: ray ratio 1
  const VectorXcd v0 = random_complex(4, 23);
  const auto ev0 = reduction::reduced_eval(ctx, u, v0, opts);
  REQUIRE(ev0.max.converged);
  const auto ev1 = reduction::reduced_eval(ctx, u, ev0.max.g, opts);
  const auto gr1 = reduction::reduced_gradient(ctx, u, ev0.max.g, ev1.max);
  CHECK(gr1.t_ratio == doctest::Approx(1.0).epsilon(1e-8));

  // finite differences of the reduced energy against the dual gradient
  const VectorXcd base = random_complex(4, 29);
  const auto evb = reduction::reduced_eval(ctx, u, base, opts);
  REQUIRE(evb.max.converged);
  const auto gr = reduction::reduced_gradient(ctx, u, base, evb.max);

  auto packed_energy = [&](const VectorXd& x) {
    VectorXcd v(4);
    for (int i = 0; i < 4; ++i) v[i] = std::complex<double>(x[2 * i], x[2 * i + 1]);
    return reduction::reduced_energy(ctx, u, v, opts);
  };
  VectorXd x0(8);
  for (int i = 0; i < 4; ++i) {
    x0[2 * i] = base[i].real();
    x0[2 * i + 1] = base[i].imag();
  }
  const VectorXd fd = oracle::fd_gradient(packed_energy, x0, 1e-5);
  for (int i = 0; i < 4; ++i) {
    CHECK(fd[2 * i] == doctest::Approx(gr.v_dual[i].real()).epsilon(1e-4));
    CHECK(fd[2 * i + 1] == doctest::Approx(gr.v_dual[i].imag()).epsilon(1e-4));
  }
}

TEST_CASE("minimize_reduced on toys") {
  VectorXd ev(2);
  ev << 1.0, -1.0;
  ToyContext ctx(make_toy(ev, 3.0, 1.0, MatrixXd::Identity(2, 2)));
  const std::monostate u{};
  reduction::MinimizeOptions opts;
  opts.tol = 1e-9;

  // converges to the ray solution with energy 1/4 from any start
  const VectorXcd v0 = random_complex(2, 77);
  const auto res = reduction::minimize_reduced(ctx, u, v0, opts);
  CHECK(res.converged);
  CHECK(res.iterations <= 200);
  CHECK(res.energy == doctest::Approx(0.25).epsilon(1e-9));

  // starting at the critical point terminates without stepping
  const auto res2 = reduction::minimize_reduced(ctx, u, res.v, opts);
  CHECK(res2.converged);
  CHECK(res2.iterations == 0);

  // antipodal starts give the Z2 partner at the same energy
  VectorXd ev4(4);
  ev4 << -1.3, -0.7, 0.8, 1.5;
  MatrixXd w = MatrixXd::Identity(4, 4);
  w(1, 2) = w(2, 1) = 0.25;
  ToyContext ctx4(make_toy(ev4, 3.0, 1.0, w));
  const VectorXcd start = random_complex(4, 31);
  const auto plus_run = reduction::minimize_reduced(ctx4, u, start, opts);
  const auto minus_run = reduction::minimize_reduced(ctx4, u, VectorXcd(-start), opts);
  REQUIRE(plus_run.converged);
  REQUIRE(minus_run.converged);
  CHECK(std::abs(plus_run.energy - minus_run.energy) <= 1e-10);
  CHECK((plus_run.max.g + minus_run.max.g).norm() <= 1e-6);

  // monotone energy trace
  for (size_t i = 1; i < plus_run.trace.size(); ++i)
    CHECK(plus_run.trace[i].energy <= plus_run.trace[i - 1].energy + 1e-13);
}
