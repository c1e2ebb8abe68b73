#include "nehari/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nehari::spectral {

namespace {

// Manual LDL^H factor probe so an SPD failure can name the pivot.
int first_bad_pivot(const MatrixXcd& m) {
  const int n = static_cast<int>(m.rows());
  MatrixXcd l = MatrixXcd::Zero(n, n);
  VectorXd d = VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    Complex acc = m(k, k);
    for (int j = 0; j < k; ++j) acc -= l(k, j) * std::conj(l(k, j)) * d[j];
    d[k] = acc.real();
    if (!(d[k] > 0.0)) return k;
    for (int i = k + 1; i < n; ++i) {
      Complex s = m(i, k);
      for (int j = 0; j < k; ++j) s -= l(i, j) * std::conj(l(k, j)) * d[j];
      l(i, k) = s / d[k];
    }
  }
  return -1;
}

}  // namespace

SplitVector::SplitVector(VectorXcd a, const SpectralModel& m)
    : coeffs(std::move(a)), model(&m) {
  if (coeffs.size() != m.dim)
    throw SpectralError("SplitVector: coefficient length " +
                        std::to_string(coeffs.size()) + " does not match model dim " +
                        std::to_string(m.dim));
}

VectorXcd SpectralModel::to_eigen(const VectorXcd& x) const {
  if (identity_gram) return basis.adjoint() * x;
  return basis.adjoint() * (gram * x);
}

VectorXcd SpectralModel::from_eigen(const VectorXcd& a) const { return basis * a; }

VectorXcd SpectralModel::dual_to_eigen(const VectorXcd& d) const {
  return basis.adjoint() * d;
}

SpectralModel build_spectral_model(const MatrixXcd& operator_matrix,
                                   const std::optional<MatrixXcd>& gram,
                                   double kernel_tolerance) {
  const int n = static_cast<int>(operator_matrix.rows());
  if (n == 0) throw SpectralError("build_spectral_model: empty operator (dim = 0)");
  if (operator_matrix.cols() != n)
    throw SpectralError("build_spectral_model: operator not square");

  const double scale = std::max(1.0, operator_matrix.norm());
  const double defect = (operator_matrix - operator_matrix.adjoint()).norm();
  if (defect > 1e-10 * scale) {
    std::ostringstream os;
    os << "build_spectral_model: operator not hermitian, defect " << defect
       << " (relative " << defect / scale << ")";
    throw SpectralError(os.str());
  }

  SpectralModel model;
  model.dim = n;

  if (gram) {
    if (gram->rows() != n || gram->cols() != n)
      throw SpectralError("build_spectral_model: gram dimension mismatch");
    const double gdefect = (*gram - gram->adjoint()).norm();
    if (gdefect > 1e-10 * std::max(1.0, gram->norm()))
      throw SpectralError("build_spectral_model: gram not hermitian");
    const int bad = first_bad_pivot(*gram);
    if (bad >= 0)
      throw SpectralError("build_spectral_model: gram not positive definite (pivot " +
                          std::to_string(bad) + ")");
    model.gram = *gram;
    model.identity_gram = (model.gram - MatrixXcd::Identity(n, n)).norm() < 1e-14 * n;
  } else {
    model.gram = MatrixXcd::Identity(n, n);
    model.identity_gram = true;
  }

  // Hermitize exactly before decomposing; callers validated the defect above.
  const MatrixXcd a = 0.5 * (operator_matrix + operator_matrix.adjoint());

  if (model.identity_gram) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
    if (es.info() != Eigen::Success)
      throw SpectralError("build_spectral_model: eigendecomposition failed");
    model.eigenvalues = es.eigenvalues();
    model.basis = es.eigenvectors();
  } else {
    const MatrixXcd b = 0.5 * (model.gram + model.gram.adjoint());
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXcd> es(a, b,
                                                           Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success)
      throw SpectralError("build_spectral_model: generalized eigendecomposition failed");
    model.eigenvalues = es.eigenvalues();
    model.basis = es.eigenvectors();
  }

  const double lam_max = model.eigenvalues.cwiseAbs().maxCoeff();
  model.kernel_tolerance =
      kernel_tolerance >= 0.0 ? kernel_tolerance : 1e-8 * std::max(lam_max, 1e-300);

  for (int i = 0; i < n; ++i) {
    switch (model.sign_of(i)) {
      case ModeSign::Plus: model.index_plus.push_back(i); break;
      case ModeSign::Minus: model.index_minus.push_back(i); break;
      case ModeSign::Zero: model.index_zero.push_back(i); break;
    }
  }
  return model;
}

namespace {

SplitVector masked(const SplitVector& v, ModeSign keep) {
  VectorXcd a = VectorXcd::Zero(v.coeffs.size());
  for (int i = 0; i < v.coeffs.size(); ++i)
    if (v.model->sign_of(i) == keep) a[i] = v.coeffs[i];
  return SplitVector(std::move(a), *v.model);
}

}  // namespace

SplitVector SplitVector::plus() const { return masked(*this, ModeSign::Plus); }
SplitVector SplitVector::minus() const { return masked(*this, ModeSign::Minus); }
SplitVector SplitVector::zero() const { return masked(*this, ModeSign::Zero); }

void split(const SplitVector& v, SplitVector& v_plus, SplitVector& v_minus,
           SplitVector& v_zero) {
  v_plus = v.plus();
  v_minus = v.minus();
  v_zero = v.zero();
}

double v_norm_squared(const SplitVector& v) {
  double s = 0.0;
  for (int i = 0; i < v.coeffs.size(); ++i)
    s += v.model->vweight(i) * std::norm(v.coeffs[i]);
  return s;
}

double v_norm(const SplitVector& v) { return std::sqrt(v_norm_squared(v)); }

double v_inner(const SplitVector& a, const SplitVector& b) {
  if (a.model != b.model)
    throw SpectralError("v_inner: vectors belong to different models");
  double s = 0.0;
  for (int i = 0; i < a.coeffs.size(); ++i)
    s += a.model->vweight(i) * (a.coeffs[i] * std::conj(b.coeffs[i])).real();
  return s;
}

double quadratic_form(const SplitVector& v) {
  double s = 0.0;
  for (int i = 0; i < v.coeffs.size(); ++i)
    s += v.model->eigenvalues[i] * std::norm(v.coeffs[i]);
  return s;
}

SplitVector apply_inverse_precond(const SplitVector& v, double shift) {
  if (!(shift > 0.0))
    throw SpectralError("apply_inverse_precond: shift must be positive");
  VectorXcd a = v.coeffs;
  for (int i = 0; i < a.size(); ++i) a[i] /= shift + std::abs(v.model->eigenvalues[i]);
  return SplitVector(std::move(a), *v.model);
}

double w_norm(const SplitVector& v) { return v.coeffs.norm(); }

}  // namespace nehari::spectral
