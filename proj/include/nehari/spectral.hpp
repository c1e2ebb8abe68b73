// Spectral calculus for a self-adjoint operator L on a finite-dimensional
// truncation: eigendecomposition with sign splitting, |L|^{1/2}-weighted
// norms, and diagonal preconditioners.
//
// Conventions.  The operator pair (A, B) defines the generalized hermitian
// eigenproblem A x = lambda B x with B hermitian positive definite (B = I
// when no Gram matrix is supplied).  Eigenvectors are B-orthonormal, so a
// coefficient vector `a` in the eigenbasis carries the W-inner product
// <v1,v2>_W = sum a1_i conj(a2_i) and the V-inner product
//   <v1,v2>_V = sum |lambda_i| a1_i conj(a2_i),
// with kernel modes (|lambda| <= kernel_tolerance) weighted by 1 so that
// ||.||_V stays a norm when L has a kernel.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nehari::spectral {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class ModeSign { Minus, Zero, Plus };

struct SpectralModel {
  int dim = 0;
  VectorXd eigenvalues;          // ascending
  MatrixXcd basis;               // columns B-orthonormal: basis^H gram basis = I
  MatrixXcd gram;                // hermitian positive definite (identity allowed)
  bool identity_gram = true;
  std::vector<int> index_plus;
  std::vector<int> index_minus;
  std::vector<int> index_zero;
  double kernel_tolerance = 0.0;

  ModeSign sign_of(int i) const {
    const double lam = eigenvalues[i];
    if (std::abs(lam) <= kernel_tolerance) return ModeSign::Zero;
    return lam > 0 ? ModeSign::Plus : ModeSign::Minus;
  }

  // |lambda_i| with the weight-1 kernel convention.
  double vweight(int i) const {
    return sign_of(i) == ModeSign::Zero ? 1.0 : std::abs(eigenvalues[i]);
  }

  // eigen coefficients of a vector given in the ambient (mode) basis
  VectorXcd to_eigen(const VectorXcd& x) const;
  // ambient coordinates from eigen coefficients
  VectorXcd from_eigen(const VectorXcd& a) const;
  // eigen representation of a dual vector d (functional h -> h^H d)
  VectorXcd dual_to_eigen(const VectorXcd& d) const;
};

// Coefficients in the eigenbasis of a SpectralModel.
struct SplitVector {
  VectorXcd coeffs;
  const SpectralModel* model = nullptr;

  SplitVector() = default;
  SplitVector(VectorXcd a, const SpectralModel& m);

  SplitVector plus() const;
  SplitVector minus() const;
  SplitVector zero() const;
};

struct SpectralError : std::runtime_error {
  explicit SpectralError(const std::string& what) : std::runtime_error(what) {}
};

// Generalized hermitian eigendecomposition with sign classification.
// Rejects non-hermitian input (relative Frobenius defect > 1e-10) and
// non-SPD gram matrices (error names the failing pivot).  A negative
// kernel_tolerance selects the default 1e-8 * max|lambda|.
SpectralModel build_spectral_model(const MatrixXcd& operator_matrix,
                                   const std::optional<MatrixXcd>& gram,
                                   double kernel_tolerance);

// Parts of v by eigenvalue sign; they sum to v and are V-orthogonal.
void split(const SplitVector& v, SplitVector& v_plus, SplitVector& v_minus,
           SplitVector& v_zero);

double v_norm(const SplitVector& v);
double v_norm_squared(const SplitVector& v);
double v_inner(const SplitVector& a, const SplitVector& b);  // Re <a,b>_V

// <Lv, v> = sum lambda_i |a_i|^2 = ||v+||_V^2 - ||v-||_V^2
double quadratic_form(const SplitVector& v);

// Diagonal preconditioner a_i -> a_i / (shift + |lambda_i|), shift > 0.
SplitVector apply_inverse_precond(const SplitVector& v, double shift);

double w_norm(const SplitVector& v);  // sqrt(sum |a_i|^2)

}  // namespace nehari::spectral
