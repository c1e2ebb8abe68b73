// Concrete operators for the Dirac-geodesic problem on S^1 = R/2piZ.
//
// Spinors carry the anti-periodic spin structure: psi(s) = sum_k c_k e_k(s)
// over half-integer modes k in {+-1/2, ..., +-(K_max - 1/2)} with the
// L^2-normalized mode functions e_k(s) = e^{iks} / sqrt(2pi).  The untwisted
// Dirac operator clifford_sign * i * d/ds is diagonal with eigenvalue
// -clifford_sign * k on mode k, so the spectrum is {+-1/2, +-3/2, ...} and
// kernel-free.
//
// Loops phi : S^1 -> N are a winding vector (torus charts) plus a real
// trigonometric series for the periodic part.  All integrals use the uniform
// N_grid-point periodic rule with the guard N_grid >= 4 K_max; the nonlinear
// terms are not band-limited, so everything downstream is defined through
// this fixed quadrature and truncation convergence is measured separately.

#pragma once

#include "nehari/charts.hpp"
#include "nehari/spectral.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace nehari::circle {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

struct CircleError : std::runtime_error {
  explicit CircleError(const std::string& what) : std::runtime_error(what) {}
};

struct CircleDomain {
  int k_max = 0;
  int n_fiber = 0;
  int n_grid = 0;
  int clifford_sign = +1;

  CircleDomain() = default;
  CircleDomain(int kmax, int nfiber, int ngrid, int sign = +1);

  int n_modes() const { return 2 * k_max; }
  int total_dim() const { return n_modes() * n_fiber; }
  double mode(int i) const { return static_cast<double>(i) - k_max + 0.5; }
  double node(int j) const;
  double quad_weight() const;  // 2pi / n_grid
  int flat_index(int mode_i, int fiber_c) const { return mode_i * n_fiber + fiber_c; }
};

// e_k(s_j) for every retained mode, N_grid x n_modes.
const MatrixXcd& mode_values(const CircleDomain& dom);

// Real trig basis values tau_r(s_j); row layout of LoopMap coefficients:
// r = 0 -> 1, r = 2m-1 -> cos(ms), r = 2m -> sin(ms).
MatrixXd trig_values(const CircleDomain& dom, int m_phi);
int trig_rows(int m_phi);
int trig_mode_of_row(int row);          // integer frequency m of a row
double trig_norm_squared(int row);      // ||tau_r||^2_{L^2}

struct LoopMap {
  std::shared_ptr<const Chart> chart;
  VectorXi winding;   // length n_fiber; zero unless the chart supports winding
  MatrixXd coeffs;    // (2 m_phi + 1) x n_fiber
  int m_phi = 0;

  LoopMap() = default;
  LoopMap(std::shared_ptr<const Chart> c, VectorXi w, int mphi);

  int n_fiber() const { return static_cast<int>(winding.size()); }
  VectorXd value(double s) const;
  VectorXd derivative(double s) const;
  VectorXd second_derivative(double s) const;
  std::uint64_t content_hash() const;
  bool same_content(const LoopMap& other) const;
};

struct SpinorField {
  const CircleDomain* domain = nullptr;
  VectorXcd coeffs;  // flattened (mode, fiber), mode-major

  SpinorField() = default;
  SpinorField(const CircleDomain& dom, VectorXcd c);
  Complex& at(int mode_i, int fiber_c) { return coeffs[domain->flat_index(mode_i, fiber_c)]; }
  Complex at(int mode_i, int fiber_c) const { return coeffs[domain->flat_index(mode_i, fiber_c)]; }
};

// K(s, psi) = b(s) |psi|_g^{p+1} / (p+1) with b > 0 sampled at the nodes.
struct Nonlinearity {
  double p = 0.0;
  VectorXd b_values;
  double b_min = 0.0;
  bool warn_low_p = false;   // p <= 2 (outside the assumed range)
  bool warn_high_p = false;  // p >= 3 (outside the two-dimensional coupling range)
};

Nonlinearity make_nonlinearity(const CircleDomain& dom, double p,
                               const std::function<double(double)>& b_of_s);

// Everything phi-dependent evaluated once at the quadrature nodes.
struct FieldFrame {
  const CircleDomain* domain = nullptr;
  LoopMap phi;
  bool flat = true;
  MatrixXd phi_nodes;    // N x n
  MatrixXd dphi_nodes;   // N x n
  MatrixXd ddphi_nodes;  // N x n
  std::vector<MatrixXd> g_nodes;      // empty when flat (identity)
  std::vector<Tensor3> gamma_nodes;   // empty when flat
};

FieldFrame build_frame(const CircleDomain& dom, const LoopMap& phi);

// ---- operators ------------------------------------------------------------

// Matrix of clifford_sign * i * d/ds in the mode basis (identity Gram).
MatrixXcd untwisted_dirac(const CircleDomain& dom);

struct DiracAssembly {
  MatrixXcd op;    // sesquilinear form of D_phi in the mode basis
  MatrixXcd gram;  // fiber-metric Gram matrix of the modes (exactly hermitian)
  double hermiticity_defect = 0.0;  // ||op - op^H|| / max(1, ||op||)
};

DiracAssembly assemble_twisted_dirac(const FieldFrame& frame);

// Node values of a spinor given by flattened mode coefficients, N x n.
MatrixXcd spinor_nodes(const FieldFrame& frame, const VectorXcd& coeffs);

double k_value(const Nonlinearity& nl, const FieldFrame& frame, const VectorXcd& psi);

// Mode-space dual coefficients d with <grad K, h>_W = Re(h^H d).
VectorXcd k_gradient(const Nonlinearity& nl, const FieldFrame& frame, const VectorXcd& psi);

// Directional derivative of k_gradient (real-linear in h), mode-space dual.
VectorXcd k_hessian_apply(const Nonlinearity& nl, const FieldFrame& frame,
                          const VectorXcd& psi, const VectorXcd& h);

// Hessian of b restricted to span{columns} over real coordinates
// (x_0..x_{q-1}, y_0..y_{q-1}) where h = sum (x_r + i y_r) columns_r.
MatrixXd k_hessian_restricted(const Nonlinearity& nl, const FieldFrame& frame,
                              const VectorXcd& psi, const MatrixXcd& columns);

double phi_energy(const FieldFrame& frame);

struct PhiGradient {
  MatrixXd dual;     // dE[tau_r e_c]; rows as LoopMap coefficients
  MatrixXd precond;  // raised, projected, scaled by 1/(1 + m^2)
};

// Gradient of the total energy in phi under parallel spinor transport.  For
// the power-law K the K-term drops out (|psi|_g is transport invariant); the
// remaining pieces are the covariant acceleration and the curvature coupling.
PhiGradient phi_gradient(const FieldFrame& frame, const Nonlinearity& nl,
                         const VectorXcd& psi);

// H^1-weighted norm of a preconditioned phi-gradient.
double phi_grad_norm(const MatrixXd& precond);

// First-order parallel transport of psi along the coefficient step
// delta (same layout as LoopMap::coeffs), re-projected onto the modes.
VectorXcd transport_spinor(const FieldFrame& frame, const MatrixXd& delta,
                           const VectorXcd& psi);

// ---- hypothesis audit ------------------------------------------------------

struct AuditReport {
  double c2 = 0.0;          // quadratic-dominance constant b_min (p-1)/(p+1)
  double c1 = 0.0;          // second-derivative growth constant p * max b
  int samples = 0;
  std::vector<std::string> violations;
  bool passed = false;
};

AuditReport hypothesis_audit(const Nonlinearity& nl, const CircleDomain& dom,
                             int sample_count, std::uint64_t seed = 7);

}  // namespace nehari::circle
