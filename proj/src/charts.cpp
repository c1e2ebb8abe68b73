#include "nehari/charts.hpp"

#include <cmath>
#include <stdexcept>

namespace nehari::circle {

Eigen::MatrixXd RoundSphere2::metric(const Eigen::VectorXd& y) const {
  const double lam = 2.0 / (1.0 + y.squaredNorm());
  return lam * lam * Eigen::MatrixXd::Identity(2, 2);
}

Tensor3 RoundSphere2::christoffel(const Eigen::VectorXd& y) const {
  // Conformal metric g = e^{2 sigma} I: Gamma^i_jk = d_i{j} dsigma_k
  // + d_i{k} dsigma_j - d_j{k} dsigma_i with dsigma_i = -2 y_i / (1+|y|^2).
  const double denom = 1.0 + y.squaredNorm();
  Eigen::Vector2d ds = -2.0 * y / denom;
  Tensor3 g(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double val = 0.0;
        if (i == j) val += ds[k];
        if (i == k) val += ds[j];
        if (j == k) val -= ds[i];
        g(i, j, k) = val;
      }
  return g;
}

Tensor4 RoundSphere2::riemann_lower(const Eigen::VectorXd& y) const {
  // Constant curvature +1: R_abcd = g_ac g_bd - g_ad g_bc.
  const Eigen::MatrixXd g = metric(y);
  Tensor4 r(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          r(a, b, c, d) = g(a, c) * g(b, d) - g(a, d) * g(b, c);
  return r;
}

Tensor4 CallableChart::riemann_lower(const Eigen::VectorXd& y) const {
  const Tensor4 mixed = riemann_(y);
  const Eigen::MatrixXd g = g_(y);
  Tensor4 low(n_);
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      for (int c = 0; c < n_; ++c)
        for (int d = 0; d < n_; ++d) {
          double s = 0.0;
          for (int j = 0; j < n_; ++j) s += g(a, j) * mixed(j, b, c, d);
          low(a, b, c, d) = s;
        }
  return low;
}

std::shared_ptr<const Chart> make_chart(const std::string& name, int n_fiber) {
  if (name == "flat_torus") return std::make_shared<FlatTorus>(n_fiber);
  if (name == "sphere") {
    if (n_fiber != 0 && n_fiber != 2)
      throw std::invalid_argument("sphere chart has fiber dimension 2, got " +
                                  std::to_string(n_fiber));
    return std::make_shared<RoundSphere2>();
  }
  throw std::invalid_argument("unknown chart: " + name);
}

}  // namespace nehari::circle
