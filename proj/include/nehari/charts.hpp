// Target-manifold chart plug-ins: fiber metric g_ij(y), Christoffel symbols
// Gamma^i_jk(y) and the lowered curvature tensor R_abcd(y), with dimension
// metadata.  Built-ins: FlatTorus(n) (g = I, Gamma = 0, R = 0) and the round
// 2-sphere in its stereographic chart.

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nehari::circle {

// Dense little tensors indexed (i,j,k) and (a,b,c,d); n <= 3 in practice.
struct Tensor3 {
  int n = 0;
  std::vector<double> v;
  Tensor3() = default;
  explicit Tensor3(int dim) : n(dim), v(static_cast<size_t>(dim) * dim * dim, 0.0) {}
  double& operator()(int i, int j, int k) { return v[(static_cast<size_t>(i) * n + j) * n + k]; }
  double operator()(int i, int j, int k) const { return v[(static_cast<size_t>(i) * n + j) * n + k]; }
};

struct Tensor4 {
  int n = 0;
  std::vector<double> v;
  Tensor4() = default;
  explicit Tensor4(int dim) : n(dim), v(static_cast<size_t>(dim) * dim * dim * dim, 0.0) {}
  double& operator()(int a, int b, int c, int d) {
    return v[((static_cast<size_t>(a) * n + b) * n + c) * n + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return v[((static_cast<size_t>(a) * n + b) * n + c) * n + d];
  }
};

class Chart {
 public:
  virtual ~Chart() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  // Flat charts short-circuit assembly: g = I, Gamma = 0, R = 0 everywhere.
  virtual bool flat() const { return false; }
  // Winding classes exist only for torus targets.
  virtual bool supports_winding() const { return false; }
  virtual Eigen::MatrixXd metric(const Eigen::VectorXd& y) const = 0;
  virtual Tensor3 christoffel(const Eigen::VectorXd& y) const = 0;
  // R_abcd = g( R(e_c, e_d) e_b, e_a ); lowered, first-pair antisymmetric.
  virtual Tensor4 riemann_lower(const Eigen::VectorXd& y) const = 0;
};

class FlatTorus final : public Chart {
 public:
  explicit FlatTorus(int n) : n_(n) {}
  int dim() const override { return n_; }
  std::string name() const override { return "flat_torus"; }
  bool flat() const override { return true; }
  bool supports_winding() const override { return true; }
  Eigen::MatrixXd metric(const Eigen::VectorXd&) const override {
    return Eigen::MatrixXd::Identity(n_, n_);
  }
  Tensor3 christoffel(const Eigen::VectorXd&) const override { return Tensor3(n_); }
  Tensor4 riemann_lower(const Eigen::VectorXd&) const override { return Tensor4(n_); }

 private:
  int n_;
};

// Unit round sphere, stereographic coordinates: g = lam^2 I with
// lam(y) = 2 / (1 + |y|^2); Gauss curvature +1.
class RoundSphere2 final : public Chart {
 public:
  int dim() const override { return 2; }
  std::string name() const override { return "sphere"; }
  Eigen::MatrixXd metric(const Eigen::VectorXd& y) const override;
  Tensor3 christoffel(const Eigen::VectorXd& y) const override;
  Tensor4 riemann_lower(const Eigen::VectorXd& y) const override;
};

// Adapter for user-supplied callables.  The curvature callable returns the
// mixed tensor R^j_{bcd}; it is lowered with the metric internally.
class CallableChart final : public Chart {
 public:
  using MetricFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
  using ChristoffelFn = std::function<Tensor3(const Eigen::VectorXd&)>;
  using RiemannMixedFn = std::function<Tensor4(const Eigen::VectorXd&)>;

  CallableChart(int n, std::string name, MetricFn g, ChristoffelFn gamma,
                RiemannMixedFn riemann_mixed)
      : n_(n), name_(std::move(name)), g_(std::move(g)), gamma_(std::move(gamma)),
        riemann_(std::move(riemann_mixed)) {}

  int dim() const override { return n_; }
  std::string name() const override { return name_; }
  Eigen::MatrixXd metric(const Eigen::VectorXd& y) const override { return g_(y); }
  Tensor3 christoffel(const Eigen::VectorXd& y) const override { return gamma_(y); }
  Tensor4 riemann_lower(const Eigen::VectorXd& y) const override;

 private:
  int n_;
  std::string name_;
  MetricFn g_;
  ChristoffelFn gamma_;
  RiemannMixedFn riemann_;
};

std::shared_ptr<const Chart> make_chart(const std::string& name, int n_fiber);

}  // namespace nehari::circle
