#include "nehari/circle.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nehari::circle;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

constexpr double kPi = std::numbers::pi;

LoopMap random_sphere_loop(int m_phi, double scale, std::uint64_t seed) {
  auto chart = make_chart("sphere", 2);
  LoopMap phi(chart, VectorXi::Zero(2), m_phi);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < phi.coeffs.rows(); ++r)
      phi.coeffs(r, c) = scale * g(rng) / (1.0 + trig_mode_of_row(r));
  return phi;
}

VectorXcd random_spinor(const CircleDomain& dom, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXcd psi(dom.total_dim());
  for (int i = 0; i < psi.size(); ++i) psi[i] = std::complex<double>(g(rng), g(rng));
  return psi;
}

// single L^2-normalized mode scaled so the pointwise magnitude is t
VectorXcd constant_magnitude_mode(const CircleDomain& dom, int mode_i, double t) {
  VectorXcd psi = VectorXcd::Zero(dom.total_dim());
  psi[dom.flat_index(mode_i, 0)] = t * std::sqrt(2.0 * kPi);
  return psi;
}

double dirac_energy(const FieldFrame& frame, const VectorXcd& psi) {
  const DiracAssembly a = assemble_twisted_dirac(frame);
  return 0.5 * (psi.adjoint() * (a.op * psi))(0, 0).real();
}

}  // namespace

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(CircleDomain(0, 1, 8), CircleError);
  CHECK_THROWS_AS(CircleDomain(4, 1, 15), CircleError);  // aliasing guard
  CHECK_NOTHROW(CircleDomain(4, 1, 16));
}

TEST_CASE("untwisted operator: half-integer symmetric spectrum, no kernel") {
  const CircleDomain dom(2, 1, 8);
  const MatrixXcd d = untwisted_dirac(dom);
  std::vector<double> eig;
  for (int i = 0; i < 4; ++i) eig.push_back(d(i, i).real());
  std::sort(eig.begin(), eig.end());
  CHECK(eig[0] == doctest::Approx(-1.5));
  CHECK(eig[1] == doctest::Approx(-0.5));
  CHECK(eig[2] == doctest::Approx(0.5));
  CHECK(eig[3] == doctest::Approx(1.5));

  const CircleDomain dom8(8, 1, 32);
  const MatrixXcd d8 = untwisted_dirac(dom8);
  CHECK((d8 - d8.adjoint()).norm() == 0.0);
  double min_abs = 1e9;
  for (int i = 0; i < d8.rows(); ++i) min_abs = std::min(min_abs, std::abs(d8(i, i).real()));
  CHECK(min_abs == doctest::Approx(0.5));
}

TEST_CASE("flat assembly equals the untwisted operator exactly") {
  const CircleDomain dom(4, 1, 16);
  LoopMap phi(make_chart("flat_torus", 1), VectorXi::Zero(1), 4);
  phi.coeffs(1, 0) = 0.3;
  phi.coeffs(4, 0) = -0.2;
  const DiracAssembly a = assemble_twisted_dirac(build_frame(dom, phi));
  CHECK((a.op - untwisted_dirac(dom)).norm() == 0.0);
  CHECK((a.gram - MatrixXcd::Identity(8, 8)).norm() == 0.0);

  // winding does not enter the flat connection
  const CircleDomain dom2(3, 2, 12);
  VectorXi w(2);
  w << 3, -1;
  LoopMap phi2(make_chart("flat_torus", 2), w, 3);
  const DiracAssembly a2 = assemble_twisted_dirac(build_frame(dom2, phi2));
  CHECK((a2.op - untwisted_dirac(dom2)).norm() == 0.0);
}

TEST_CASE("sphere assembly: gram-hermiticity and connection linearity") {
  const CircleDomain dom(8, 2, 64);
  for (int rep = 0; rep < 20; ++rep) {
    const LoopMap phi = random_sphere_loop(4, 0.08, 100 + rep);
    FieldFrame frame = build_frame(dom, phi);
    const DiracAssembly a = assemble_twisted_dirac(frame);
    CHECK(a.hermiticity_defect <= 1e-9);
    CHECK((a.gram - a.gram.adjoint()).norm() == 0.0);

    // linearity in the loop derivative: scale dphi with the base point fixed
    FieldFrame f0 = frame, f2 = frame;
    f0.dphi_nodes.setZero();
    f2.dphi_nodes *= 2.0;
    const MatrixXcd a0 = assemble_twisted_dirac(f0).op;
    const MatrixXcd a1 = a.op;
    const MatrixXcd a2 = assemble_twisted_dirac(f2).op;
    CHECK(((a2 - a1) - (a1 - a0)).norm() <= 1e-10 * std::max(1.0, a1.norm()));
  }
}

TEST_CASE("connection term is linear over random derivative combinations") {
  const CircleDomain dom(5, 2, 24);
  const LoopMap phi = random_sphere_loop(3, 0.2, 7);
  const FieldFrame base = build_frame(dom, phi);
  FieldFrame fa = base, fb = base, fc = base;
  std::mt19937_64 rng(123);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd d1 = base.dphi_nodes, d2 = base.dphi_nodes;
  for (int j = 0; j < d1.rows(); ++j)
    for (int c = 0; c < d1.cols(); ++c) {
      d1(j, c) = g(rng);
      d2(j, c) = g(rng);
    }
  const double alpha = 0.7, beta = -1.3;
  fa.dphi_nodes = d1;
  fb.dphi_nodes = d2;
  fc.dphi_nodes = alpha * d1 + beta * d2;
  FieldFrame f0 = base;
  f0.dphi_nodes.setZero();
  const MatrixXcd a0 = assemble_twisted_dirac(f0).op;
  const MatrixXcd conn_a = assemble_twisted_dirac(fa).op - a0;
  const MatrixXcd conn_b = assemble_twisted_dirac(fb).op - a0;
  const MatrixXcd conn_c = assemble_twisted_dirac(fc).op - a0;
  CHECK((conn_c - alpha * conn_a - beta * conn_b).norm() <=
        1e-10 * std::max(1.0, conn_c.norm()));
}

TEST_CASE("k_value basics and quadrature refinement") {
  const CircleDomain dom(4, 1, 32);
  LoopMap phi(make_chart("flat_torus", 1), VectorXi::Zero(1), 4);
  const FieldFrame frame = build_frame(dom, phi);
  const Nonlinearity nl = make_nonlinearity(dom, 3.0, [](double) { return 1.0; });

  CHECK(k_value(nl, frame, VectorXcd::Zero(dom.total_dim())) == 0.0);

  const double t = 0.8;
  const VectorXcd psi = constant_magnitude_mode(dom, 1, t);
  CHECK(k_value(nl, frame, psi) ==
        doctest::Approx(2.0 * kPi * std::pow(t, 4.0) / 4.0).epsilon(1e-12));

  // two-mode field vs a 16x denser reference quadrature
  VectorXcd psi2 = VectorXcd::Zero(dom.total_dim());
  psi2[dom.flat_index(3, 0)] = std::complex<double>(0.7, 0.2);
  psi2[dom.flat_index(5, 0)] = std::complex<double>(-0.3, 0.5);
  const CircleDomain dense(4, 1, 32 * 16);
  const FieldFrame dense_frame = build_frame(dense, phi);
  const Nonlinearity dense_nl = make_nonlinearity(dense, 3.0, [](double) { return 1.0; });
  VectorXcd psi2_dense = VectorXcd::Zero(dense.total_dim());
  psi2_dense[dense.flat_index(3, 0)] = psi2[dom.flat_index(3, 0)];
  psi2_dense[dense.flat_index(5, 0)] = psi2[dom.flat_index(5, 0)];
  CHECK(std::abs(k_value(nl, frame, psi2) - k_value(dense_nl, dense_frame, psi2_dense)) <=
        1e-8);

  // doubling the grid moves a band-limited p = 3 value by <= 1e-8
  const CircleDomain doubled(4, 1, 64);
  const FieldFrame dframe = build_frame(doubled, phi);
  const Nonlinearity dnl = make_nonlinearity(doubled, 3.0, [](double) { return 1.0; });
  CHECK(std::abs(k_value(nl, frame, psi2) - k_value(dnl, dframe, psi2)) <= 1e-8);
}

TEST_CASE("k_gradient: closed forms and finite differences") {
  const CircleDomain dom(4, 1, 32);
  LoopMap phi(make_chart("flat_torus", 1), VectorXi::Zero(1), 4);
  const FieldFrame frame = build_frame(dom, phi);
  const Nonlinearity nl = make_nonlinearity(dom, 3.0, [](double) { return 1.0; });

  CHECK(k_gradient(nl, frame, VectorXcd::Zero(dom.total_dim())).norm() == 0.0);

  const double t = 1.3;
  const VectorXcd psi = constant_magnitude_mode(dom, 2, t);
  const VectorXcd d = k_gradient(nl, frame, psi);
  CHECK((d - std::pow(t, 2.0) * psi).norm() <= 1e-10 * d.norm());

  // central differences of k_value against the dual pairing
  const VectorXcd pr = random_spinor(dom, 42);
  const VectorXcd dual = k_gradient(nl, frame, pr);
  const double h = 1e-5;
  for (int j = 0; j < 4; ++j) {
    VectorXcd e = VectorXcd::Zero(pr.size());
    e[2 * j] = 1.0;
    const double fd = (k_value(nl, frame, pr + h * e) - k_value(nl, frame, pr - h * e)) /
                      (2.0 * h);
    const double an = (e.adjoint() * dual)(0, 0).real();
    CHECK(fd == doctest::Approx(an).epsilon(1e-4));
    e[2 * j] = std::complex<double>(0.0, 1.0);
    const double fdi = (k_value(nl, frame, pr + h * e) - k_value(nl, frame, pr - h * e)) /
                       (2.0 * h);
    const double ani = (e.adjoint() * dual)(0, 0).real();
    CHECK(fdi == doctest::Approx(ani).epsilon(1e-4));
  }

  // hessian apply consistency: directional derivative of k_gradient
  const VectorXcd hdir = random_spinor(dom, 43);
  const VectorXcd hess = k_hessian_apply(nl, frame, pr, hdir);
  const VectorXcd fd_hess =
      (k_gradient(nl, frame, pr + h * hdir) - k_gradient(nl, frame, pr - h * hdir)) /
      (2.0 * h);
  CHECK((hess - fd_hess).norm() <= 1e-4 * std::max(1.0, fd_hess.norm()));
}

TEST_CASE("phi_energy closed forms") {
  const CircleDomain dom(4, 1, 16);
  auto chart = make_chart("flat_torus", 1);

  LoopMap constant(chart, VectorXi::Zero(1), 4);
  constant.coeffs(0, 0) = 2.4;
  CHECK(phi_energy(build_frame(dom, constant)) == 0.0);

  VectorXi w(1);
  w << 2;
  LoopMap winding(chart, w, 4);
  CHECK(phi_energy(build_frame(dom, winding)) == doctest::Approx(4.0 * kPi).epsilon(1e-14));

  // winding + one mode: energies add by orthogonality
  LoopMap both(chart, w, 4);
  both.coeffs(1, 0) = 0.5;  // 0.5 cos(s)
  const double expected = 4.0 * kPi + 0.5 * 0.25 * kPi;
  CHECK(phi_energy(build_frame(dom, both)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("phi_gradient: flat closed forms") {
  const CircleDomain dom(4, 1, 16);
  auto chart = make_chart("flat_torus", 1);
  const Nonlinearity nl = make_nonlinearity(dom, 3.0, [](double) { return 1.0; });

  VectorXi w(1);
  w << 1;
  LoopMap pure(chart, w, 4);
  const PhiGradient g0 = phi_gradient(build_frame(dom, pure), nl,
                                      VectorXcd::Zero(dom.total_dim()));
  CHECK(phi_grad_norm(g0.precond) <= 1e-14);

  LoopMap osc(chart, VectorXi::Zero(1), 4);
  const int m = 3;
  const double theta = 0.37;
  osc.coeffs(2 * m - 1, 0) = theta;  // theta cos(3s)
  const PhiGradient g1 = phi_gradient(build_frame(dom, osc), nl,
                                      VectorXcd::Zero(dom.total_dim()));
  CHECK(g1.precond(2 * m - 1, 0) ==
        doctest::Approx(theta * m * m / (1.0 + m * m)).epsilon(1e-12));
}

TEST_CASE("phi_gradient matches transported-path finite differences on the sphere") {
  // the covariant formula is the continuum derivative: the check needs the
  // retained band to resolve the transported field
  const CircleDomain dom(16, 2, 128);
  const LoopMap phi = random_sphere_loop(3, 0.1, 2024);
  const FieldFrame frame = build_frame(dom, phi);
  const Nonlinearity nl =
      make_nonlinearity(dom, 3.0, [](double s) { return 1.0 + 0.2 * std::sin(s); });
  VectorXcd psi = VectorXcd::Zero(dom.total_dim());
  {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < dom.n_modes(); ++i) {
      if (std::abs(dom.mode(i)) > 3.5) continue;
      for (int c = 0; c < 2; ++c)
        psi[dom.flat_index(i, c)] = 0.3 * std::complex<double>(gauss(rng), gauss(rng));
    }
  }

  const PhiGradient pg = phi_gradient(frame, nl, psi);

  auto energy_along = [&](const MatrixXd& dir, double eps) {
    LoopMap moved = phi;
    moved.coeffs += eps * dir;
    const FieldFrame fr = build_frame(dom, moved);
    const VectorXcd psi_eps = transport_spinor(frame, eps * dir, psi);
    return phi_energy(fr) + dirac_energy(fr, psi_eps) - k_value(nl, fr, psi_eps);
  };

  const double h = 1e-5;
  std::mt19937_64 rng(5150);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    MatrixXd dir = MatrixXd::Zero(phi.coeffs.rows(), phi.coeffs.cols());
    for (int r = 0; r < dir.rows(); ++r)
      for (int c = 0; c < dir.cols(); ++c) dir(r, c) = gauss(rng);
    const double fd = (energy_along(dir, h) - energy_along(dir, -h)) / (2.0 * h);
    double an = 0.0;
    for (int r = 0; r < dir.rows(); ++r)
      for (int c = 0; c < dir.cols(); ++c) an += pg.dual(r, c) * dir(r, c);
    CHECK(fd == doctest::Approx(an).epsilon(1e-4));
  }
}

TEST_CASE("sphere curvature tensor is consistent with the connection") {
  // numeric curvature from Christoffel differences vs the closed form
  RoundSphere2 sphere;
  Eigen::Vector2d y(0.31, -0.44);
  const double h = 1e-6;
  Tensor4 numeric(2);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd yp = y, ym = y;
    yp[c] += h;
    ym[c] -= h;
    const Tensor3 gp = sphere.christoffel(yp);
    const Tensor3 gm = sphere.christoffel(ym);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) {
          // d_c Gamma^a_{d b} enters R^a_{b c d}
          numeric(a, b, c, d) += (gp(a, d, b) - gm(a, d, b)) / (2.0 * h);
          numeric(a, b, d, c) -= (gp(a, d, b) - gm(a, d, b)) / (2.0 * h);
        }
  }
  const Tensor3 gam = sphere.christoffel(y);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          double acc = 0.0;
          for (int e = 0; e < 2; ++e)
            acc += gam(a, c, e) * gam(e, d, b) - gam(a, d, e) * gam(e, c, b);
          numeric(a, b, c, d) += acc;
        }
  const Eigen::MatrixXd g = sphere.metric(y);
  const Tensor4 closed = sphere.riemann_lower(y);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          double lowered = 0.0;
          for (int e = 0; e < 2; ++e) lowered += g(a, e) * numeric(e, b, c, d);
          CHECK(lowered == doctest::Approx(closed(a, b, c, d)).epsilon(1e-5).scale(1.0));
        }
}

TEST_CASE("hypothesis audit") {
  const CircleDomain dom(4, 1, 16);

  const Nonlinearity cubic = make_nonlinearity(dom, 3.0, [](double) { return 1.0; });
  const AuditReport r1 = hypothesis_audit(cubic, dom, 500);
  CHECK(r1.passed);
  CHECK(r1.c2 == doctest::Approx(0.5));

  const Nonlinearity perturbed =
      make_nonlinearity(dom, 2.5, [](double s) { return 1.0 + 0.5 * std::cos(s); });
  const AuditReport r2 = hypothesis_audit(perturbed, dom, 1000);
  CHECK(r2.passed);
  CHECK(r2.violations.empty());
  CHECK(perturbed.warn_low_p == false);
  CHECK(perturbed.warn_high_p == false);
  CHECK(cubic.warn_high_p == true);

  CHECK_THROWS_AS(make_nonlinearity(dom, 2.0, [](double s) { return std::cos(s); }),
                  CircleError);  // b not positive
  CHECK_THROWS_AS(make_nonlinearity(dom, 1.0, [](double) { return 1.0; }), CircleError);
}

TEST_CASE("transport: identity on flat charts, first order on the sphere") {
  const CircleDomain dom(4, 1, 16);
  LoopMap flat(make_chart("flat_torus", 1), VectorXi::Zero(1), 4);
  const FieldFrame fframe = build_frame(dom, flat);
  const VectorXcd psi = random_spinor(dom, 9);
  MatrixXd delta = MatrixXd::Zero(flat.coeffs.rows(), 1);
  delta(1, 0) = 0.3;
  CHECK((transport_spinor(fframe, delta, psi) - psi).norm() == 0.0);

  const CircleDomain dom2(5, 2, 24);
  const LoopMap sphere = random_sphere_loop(3, 0.1, 31);
  const FieldFrame sframe = build_frame(dom2, sphere);
  const VectorXcd psi2 = random_spinor(dom2, 10);
  MatrixXd d2 = MatrixXd::Zero(sphere.coeffs.rows(), 2);
  d2(0, 0) = 1e-4;
  d2(2, 1) = -1e-4;
  const VectorXcd moved = transport_spinor(sframe, d2, psi2);
  CHECK((moved - psi2).norm() <= 2e-3 * psi2.norm());
  CHECK((moved - psi2).norm() > 0.0);
}
