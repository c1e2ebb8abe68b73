#include "nehari/circle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace nehari::circle {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

CircleDomain::CircleDomain(int kmax, int nfiber, int ngrid, int sign)
    : k_max(kmax), n_fiber(nfiber), n_grid(ngrid), clifford_sign(sign) {
  if (k_max < 1) throw CircleError("CircleDomain: k_max must be >= 1");
  if (n_fiber < 1) throw CircleError("CircleDomain: n_fiber must be >= 1");
  if (n_grid < 4 * k_max)
    throw CircleError("CircleDomain: aliasing guard requires n_grid >= 4*k_max (got " +
                      std::to_string(n_grid) + " < " + std::to_string(4 * k_max) + ")");
  if (sign != 1 && sign != -1) throw CircleError("CircleDomain: clifford_sign must be +-1");
}

double CircleDomain::node(int j) const { return kTwoPi * j / n_grid; }
double CircleDomain::quad_weight() const { return kTwoPi / n_grid; }

const MatrixXcd& mode_values(const CircleDomain& dom) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MatrixXcd>> cache;
  std::scoped_lock lock(mu);
  auto key = std::make_pair(dom.k_max, dom.n_grid);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto m = std::make_unique<MatrixXcd>(dom.n_grid, dom.n_modes());
    const double norm = 1.0 / std::sqrt(kTwoPi);
    for (int j = 0; j < dom.n_grid; ++j)
      for (int i = 0; i < dom.n_modes(); ++i)
        (*m)(j, i) = norm * std::polar(1.0, dom.mode(i) * dom.node(j));
    it = cache.emplace(key, std::move(m)).first;
  }
  return *it->second;
}

int trig_rows(int m_phi) { return 2 * m_phi + 1; }

int trig_mode_of_row(int row) { return row == 0 ? 0 : (row + 1) / 2; }

double trig_norm_squared(int row) { return row == 0 ? kTwoPi : std::numbers::pi; }

MatrixXd trig_values(const CircleDomain& dom, int m_phi) {
  MatrixXd t(dom.n_grid, trig_rows(m_phi));
  for (int j = 0; j < dom.n_grid; ++j) {
    const double s = dom.node(j);
    t(j, 0) = 1.0;
    for (int m = 1; m <= m_phi; ++m) {
      t(j, 2 * m - 1) = std::cos(m * s);
      t(j, 2 * m) = std::sin(m * s);
    }
  }
  return t;
}

LoopMap::LoopMap(std::shared_ptr<const Chart> c, VectorXi w, int mphi)
    : chart(std::move(c)), winding(std::move(w)), m_phi(mphi) {
  if (!chart) throw CircleError("LoopMap: chart required");
  if (winding.size() != chart->dim())
    throw CircleError("LoopMap: winding length must equal chart dimension");
  if (!chart->supports_winding() && winding.any())
    throw CircleError("LoopMap: nonzero winding on a chart without winding classes");
  coeffs = MatrixXd::Zero(trig_rows(m_phi), chart->dim());
}

VectorXd LoopMap::value(double s) const {
  VectorXd y = winding.cast<double>() * s;
  for (int c = 0; c < coeffs.cols(); ++c) {
    double acc = coeffs(0, c);
    for (int m = 1; m <= m_phi; ++m)
      acc += coeffs(2 * m - 1, c) * std::cos(m * s) + coeffs(2 * m, c) * std::sin(m * s);
    y[c] += acc;
  }
  return y;
}

VectorXd LoopMap::derivative(double s) const {
  VectorXd y = winding.cast<double>();
  for (int c = 0; c < coeffs.cols(); ++c) {
    double acc = 0.0;
    for (int m = 1; m <= m_phi; ++m)
      acc += m * (-coeffs(2 * m - 1, c) * std::sin(m * s) + coeffs(2 * m, c) * std::cos(m * s));
    y[c] += acc;
  }
  return y;
}

VectorXd LoopMap::second_derivative(double s) const {
  VectorXd y = VectorXd::Zero(coeffs.cols());
  for (int c = 0; c < coeffs.cols(); ++c) {
    double acc = 0.0;
    for (int m = 1; m <= m_phi; ++m)
      acc -= m * m *
             (coeffs(2 * m - 1, c) * std::cos(m * s) + coeffs(2 * m, c) * std::sin(m * s));
    y[c] = acc;
  }
  return y;
}

std::uint64_t LoopMap::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (int i = 0; i < winding.size(); ++i) mix(&winding[i], sizeof(int));
  mix(coeffs.data(), sizeof(double) * coeffs.size());
  mix(&m_phi, sizeof(int));
  const std::string nm = chart ? chart->name() : "";
  mix(nm.data(), nm.size());
  return h;
}

bool LoopMap::same_content(const LoopMap& other) const {
  return m_phi == other.m_phi && winding == other.winding && coeffs == other.coeffs &&
         chart.get() == other.chart.get();
}

SpinorField::SpinorField(const CircleDomain& dom, VectorXcd c)
    : domain(&dom), coeffs(std::move(c)) {
  if (coeffs.size() != dom.total_dim())
    throw CircleError("SpinorField: expected " + std::to_string(dom.total_dim()) +
                      " coefficients, got " + std::to_string(coeffs.size()));
}

Nonlinearity make_nonlinearity(const CircleDomain& dom, double p,
                               const std::function<double(double)>& b_of_s) {
  if (!(p > 1.0)) throw CircleError("Nonlinearity: exponent must satisfy p > 1");
  Nonlinearity nl;
  nl.p = p;
  nl.b_values.resize(dom.n_grid);
  for (int j = 0; j < dom.n_grid; ++j) nl.b_values[j] = b_of_s(dom.node(j));
  nl.b_min = nl.b_values.minCoeff();
  if (!(nl.b_min > 0.0))
    throw CircleError("Nonlinearity: weight b(s) must be strictly positive (min = " +
                      std::to_string(nl.b_min) + ")");
  nl.warn_low_p = p <= 2.0;
  nl.warn_high_p = p >= 3.0;
  return nl;
}

FieldFrame build_frame(const CircleDomain& dom, const LoopMap& phi) {
  if (phi.chart->dim() != dom.n_fiber)
    throw CircleError("build_frame: chart dimension does not match domain n_fiber");
  FieldFrame f;
  f.domain = &dom;
  f.phi = phi;
  f.flat = phi.chart->flat();
  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  f.phi_nodes.resize(N, n);
  f.dphi_nodes.resize(N, n);
  f.ddphi_nodes.resize(N, n);
  for (int j = 0; j < N; ++j) {
    const double s = dom.node(j);
    f.phi_nodes.row(j) = phi.value(s).transpose();
    f.dphi_nodes.row(j) = phi.derivative(s).transpose();
    f.ddphi_nodes.row(j) = phi.second_derivative(s).transpose();
  }
  if (!f.flat) {
    f.g_nodes.resize(N);
    f.gamma_nodes.resize(N);
    for (int j = 0; j < N; ++j) {
      const VectorXd y = f.phi_nodes.row(j).transpose();
      f.g_nodes[j] = phi.chart->metric(y);
      f.gamma_nodes[j] = phi.chart->christoffel(y);
    }
  }
  return f;
}

MatrixXcd untwisted_dirac(const CircleDomain& dom) {
  MatrixXcd d = MatrixXcd::Zero(dom.total_dim(), dom.total_dim());
  for (int i = 0; i < dom.n_modes(); ++i)
    for (int c = 0; c < dom.n_fiber; ++c) {
      const int idx = dom.flat_index(i, c);
      d(idx, idx) = -dom.clifford_sign * dom.mode(i);
    }
  return d;
}

DiracAssembly assemble_twisted_dirac(const FieldFrame& frame) {
  const CircleDomain& dom = *frame.domain;
  const int m = dom.total_dim();
  DiracAssembly out;
  if (frame.flat) {
    out.op = untwisted_dirac(dom);
    out.gram = MatrixXcd::Identity(m, m);
    out.hermiticity_defect = 0.0;
    return out;
  }

  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  const int nm = dom.n_modes();
  const MatrixXcd& ev = mode_values(dom);
  const double sign = dom.clifford_sign;

  out.op = MatrixXcd::Zero(m, m);
  out.gram = MatrixXcd::Zero(m, m);

  // Per node: op block(d,c) = -sign k g_cd + sign i (g Gamma(phi'))_{dc},
  // gram block(d,c) = g_cd, both scaled by the L^2-normalized mode pairing.
  MatrixXd conn(n, n);
  for (int j = 0; j < N; ++j) {
    const MatrixXd& g = frame.g_nodes[j];
    const Tensor3& gam = frame.gamma_nodes[j];
    const VectorXd dphi = frame.dphi_nodes.row(j).transpose();
    conn.setZero();
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) acc += gam(a, b, c) * dphi[b];
        conn(a, c) = acc;
      }
    const MatrixXd gconn = g * conn;  // (d,c)
    for (int ki = 0; ki < nm; ++ki) {
      const double k = dom.mode(ki);
      for (int kpi = 0; kpi < nm; ++kpi) {
        // e_k(s_j) conj(e_k'(s_j)) carries the 1/(2pi); weight 2pi/N.
        const Complex phase = ev(j, ki) * std::conj(ev(j, kpi)) * (kTwoPi / N);
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            const Complex entry =
                phase * (Complex(-sign * k * g(c, d), 0.0) +
                         Complex(0.0, sign) * gconn(d, c));
            out.op(dom.flat_index(kpi, d), dom.flat_index(ki, c)) += entry;
            out.gram(dom.flat_index(kpi, d), dom.flat_index(ki, c)) += phase * g(c, d);
          }
      }
    }
  }
  out.gram = 0.5 * (out.gram + out.gram.adjoint().eval());
  out.hermiticity_defect =
      (out.op - out.op.adjoint()).norm() / std::max(1.0, out.op.norm());
  return out;
}

MatrixXcd spinor_nodes(const FieldFrame& frame, const VectorXcd& coeffs) {
  const CircleDomain& dom = *frame.domain;
  Eigen::Map<const MatrixXcd> c(coeffs.data(), dom.n_fiber, dom.n_modes());
  // coeffs are mode-major: entry (mode i, fiber c) at i*n + c, i.e. column i.
  return mode_values(dom) * c.transpose();
}

namespace {

double fiber_norm_sq(const MatrixXd* g, const Eigen::RowVectorXcd& psi) {
  if (!g) return psi.squaredNorm();
  Complex acc = 0.0;
  for (int c = 0; c < psi.size(); ++c)
    for (int d = 0; d < psi.size(); ++d) acc += (*g)(c, d) * psi[c] * std::conj(psi[d]);
  return acc.real();
}

}  // namespace

double k_value(const Nonlinearity& nl, const FieldFrame& frame, const VectorXcd& psi) {
  const CircleDomain& dom = *frame.domain;
  const MatrixXcd vals = spinor_nodes(frame, psi);
  const double w = dom.quad_weight();
  double acc = 0.0;
  for (int j = 0; j < dom.n_grid; ++j) {
    const MatrixXd* g = frame.flat ? nullptr : &frame.g_nodes[j];
    const double mag = std::sqrt(std::max(0.0, fiber_norm_sq(g, vals.row(j))));
    acc += nl.b_values[j] * std::pow(mag, nl.p + 1.0);
  }
  return w * acc / (nl.p + 1.0);
}

VectorXcd k_gradient(const Nonlinearity& nl, const FieldFrame& frame, const VectorXcd& psi) {
  const CircleDomain& dom = *frame.domain;
  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  const MatrixXcd vals = spinor_nodes(frame, psi);
  const MatrixXcd& ev = mode_values(dom);
  const double w = dom.quad_weight();

  // y(j) = g(phi) . (b |psi|^{p-1} psi); dual coeff d_{k,c} = int y_c conj(e_k).
  MatrixXcd y(N, n);
  for (int j = 0; j < N; ++j) {
    const MatrixXd* g = frame.flat ? nullptr : &frame.g_nodes[j];
    const double mag = std::sqrt(std::max(0.0, fiber_norm_sq(g, vals.row(j))));
    const double f = nl.b_values[j] * std::pow(mag, nl.p - 1.0);
    if (g)
      y.row(j) = f * (vals.row(j) * g->transpose());
    else
      y.row(j) = f * vals.row(j);
  }
  VectorXcd dual(dom.total_dim());
  for (int ki = 0; ki < dom.n_modes(); ++ki)
    for (int c = 0; c < n; ++c) {
      Complex acc = 0.0;
      for (int j = 0; j < N; ++j) acc += y(j, c) * std::conj(ev(j, ki));
      dual[dom.flat_index(ki, c)] = w * acc;
    }
  return dual;
}

VectorXcd k_hessian_apply(const Nonlinearity& nl, const FieldFrame& frame,
                          const VectorXcd& psi, const VectorXcd& h) {
  const CircleDomain& dom = *frame.domain;
  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  const MatrixXcd vals = spinor_nodes(frame, psi);
  const MatrixXcd hvals = spinor_nodes(frame, h);
  const MatrixXcd& ev = mode_values(dom);
  const double w = dom.quad_weight();

  MatrixXcd y(N, n);
  for (int j = 0; j < N; ++j) {
    const MatrixXd* g = frame.flat ? nullptr : &frame.g_nodes[j];
    const double mag = std::sqrt(std::max(0.0, fiber_norm_sq(g, vals.row(j))));
    const double fpow = nl.b_values[j] * std::pow(mag, nl.p - 1.0);
    Eigen::RowVectorXcd out = fpow * hvals.row(j);
    if (mag > 0.0) {
      // (p-1) b |psi|^{p-3} Re<h, psi>_g psi, written via the unit field so
      // the small-|psi| limit stays finite for every p > 1.
      const Eigen::RowVectorXcd psihat = vals.row(j) / mag;
      Complex hp = 0.0;
      if (g) {
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) hp += (*g)(c, d) * hvals(j, c) * std::conj(psihat[d]);
      } else {
        hp = (hvals.row(j) * psihat.adjoint())(0, 0);
      }
      const double scal = (nl.p - 1.0) * nl.b_values[j] * std::pow(mag, nl.p - 1.0) * hp.real();
      out += scal * psihat;
    }
    if (g)
      y.row(j) = out * g->transpose();
    else
      y.row(j) = out;
  }
  VectorXcd dual(dom.total_dim());
  for (int ki = 0; ki < dom.n_modes(); ++ki)
    for (int c = 0; c < n; ++c) {
      Complex acc = 0.0;
      for (int j = 0; j < N; ++j) acc += y(j, c) * std::conj(ev(j, ki));
      dual[dom.flat_index(ki, c)] = w * acc;
    }
  return dual;
}

MatrixXd k_hessian_restricted(const Nonlinearity& nl, const FieldFrame& frame,
                              const VectorXcd& psi, const MatrixXcd& columns) {
  const CircleDomain& dom = *frame.domain;
  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  const int q = static_cast<int>(columns.cols());
  const double w = dom.quad_weight();

  const MatrixXcd vals = spinor_nodes(frame, psi);
  std::vector<MatrixXcd> zvals(q);
  for (int r = 0; r < q; ++r) zvals[r] = spinor_nodes(frame, columns.col(r));

  MatrixXd hess = MatrixXd::Zero(2 * q, 2 * q);
  Eigen::VectorXcd cvec(q);
  MatrixXcd mherm(q, q);
  for (int j = 0; j < N; ++j) {
    const MatrixXd* g = frame.flat ? nullptr : &frame.g_nodes[j];
    const double mag = std::sqrt(std::max(0.0, fiber_norm_sq(g, vals.row(j))));
    const double fpow = nl.b_values[j] * std::pow(mag, nl.p - 1.0);
    const double fcurv = (nl.p - 1.0) * nl.b_values[j] * std::pow(mag, nl.p - 1.0);

    Eigen::RowVectorXcd gpsi_bar;  // conj(g . psi) row, or unit version
    Eigen::RowVectorXcd psihat = Eigen::RowVectorXcd::Zero(n);
    if (mag > 0.0) psihat = vals.row(j) / mag;
    if (g)
      gpsi_bar = (psihat * g->transpose()).conjugate();
    else
      gpsi_bar = psihat.conjugate();

    for (int r = 0; r < q; ++r) {
      // c_r = <Z_r, psihat>_g
      cvec[r] = (zvals[r].row(j).cwiseProduct(gpsi_bar)).sum();
      for (int t = 0; t <= r; ++t) {
        Complex m = 0.0;
        if (g) {
          for (int a = 0; a < n; ++a)
            for (int d = 0; d < n; ++d)
              m += (*g)(a, d) * zvals[r](j, a) * std::conj(zvals[t](j, d));
        } else {
          m = (zvals[r].row(j) * zvals[t].row(j).adjoint())(0, 0);
        }
        mherm(r, t) = m;
        mherm(t, r) = std::conj(m);
      }
    }

    for (int r = 0; r < q; ++r) {
      const double ar = cvec[r].real();
      const double br = -cvec[r].imag();
      for (int t = 0; t < q; ++t) {
        const double at = cvec[t].real();
        const double bt = -cvec[t].imag();
        const double re_m = mherm(r, t).real();
        const double im_m = mherm(r, t).imag();
        hess(r, t) += w * (fcurv * ar * at + fpow * re_m);
        hess(r, q + t) += w * (fcurv * ar * bt + fpow * im_m);
        hess(q + r, t) += w * (fcurv * br * at - fpow * im_m);
        hess(q + r, q + t) += w * (fcurv * br * bt + fpow * re_m);
      }
    }
  }
  return hess;
}

double phi_energy(const FieldFrame& frame) {
  const CircleDomain& dom = *frame.domain;
  const double w = dom.quad_weight();
  double acc = 0.0;
  for (int j = 0; j < dom.n_grid; ++j) {
    const VectorXd dphi = frame.dphi_nodes.row(j).transpose();
    if (frame.flat)
      acc += dphi.squaredNorm();
    else
      acc += dphi.dot(frame.g_nodes[j] * dphi);
  }
  return 0.5 * w * acc;
}

PhiGradient phi_gradient(const FieldFrame& frame, const Nonlinearity& nl,
                         const VectorXcd& psi) {
  (void)nl;  // K of power form is transport invariant: no direct phi term
  const CircleDomain& dom = *frame.domain;
  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  const int rows = static_cast<int>(frame.phi.coeffs.rows());
  const double w = dom.quad_weight();
  const double sign = dom.clifford_sign;

  const MatrixXcd vals = psi.size() ? spinor_nodes(frame, psi) : MatrixXcd();

  // Lowered pointwise bracket F_c(s): covariant acceleration plus the
  // curvature coupling of the fermionic term.
  MatrixXd f_low = MatrixXd::Zero(N, n);
  for (int j = 0; j < N; ++j) {
    const VectorXd dphi = frame.dphi_nodes.row(j).transpose();
    const VectorXd ddphi = frame.ddphi_nodes.row(j).transpose();
    VectorXd accel = ddphi;
    if (!frame.flat) {
      const Tensor3& gam = frame.gamma_nodes[j];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) acc += gam(i, a, b) * dphi[a] * dphi[b];
        accel[i] += acc;
      }
    }
    VectorXd fl;
    if (frame.flat)
      fl = -accel;
    else
      fl = -(frame.g_nodes[j] * accel);

    if (!frame.flat && psi.size()) {
      const VectorXd y = frame.phi_nodes.row(j).transpose();
      const Tensor4 riem = frame.phi.chart->riemann_lower(y);
      for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b)
          for (int e = 0; e < n; ++e) {
            const double imbe = (vals(j, b) * std::conj(vals(j, e))).imag();
            for (int d = 0; d < n; ++d) acc += riem(e, b, c, d) * dphi[d] * imbe;
          }
        fl[c] += -0.5 * sign * acc;
      }
    }
    f_low.row(j) = fl.transpose();
  }

  // Raised bracket for the preconditioned form.
  MatrixXd f_up(N, n);
  if (frame.flat) {
    f_up = f_low;
  } else {
    for (int j = 0; j < N; ++j)
      f_up.row(j) = frame.g_nodes[j].ldlt().solve(f_low.row(j).transpose()).transpose();
  }

  const MatrixXd tau = trig_values(dom, frame.phi.m_phi);
  PhiGradient out;
  out.dual = MatrixXd::Zero(rows, n);
  out.precond = MatrixXd::Zero(rows, n);
  for (int r = 0; r < rows; ++r) {
    const int m = trig_mode_of_row(r);
    const double tn2 = trig_norm_squared(r);
    for (int c = 0; c < n; ++c) {
      double acc_low = 0.0, acc_up = 0.0;
      for (int j = 0; j < N; ++j) {
        acc_low += f_low(j, c) * tau(j, r);
        acc_up += f_up(j, c) * tau(j, r);
      }
      out.dual(r, c) = w * acc_low;
      out.precond(r, c) = w * acc_up / (tn2 * (1.0 + m * m));
    }
  }
  return out;
}

double phi_grad_norm(const MatrixXd& precond) {
  double acc = 0.0;
  for (int r = 0; r < precond.rows(); ++r) {
    const int m = trig_mode_of_row(r);
    acc += trig_norm_squared(r) * (1.0 + m * m) * precond.row(r).squaredNorm();
  }
  return std::sqrt(acc);
}

VectorXcd transport_spinor(const FieldFrame& frame, const MatrixXd& delta,
                           const VectorXcd& psi) {
  const CircleDomain& dom = *frame.domain;
  if (frame.flat) return psi;
  const int N = dom.n_grid;
  const int n = dom.n_fiber;
  const MatrixXcd vals = spinor_nodes(frame, psi);
  const MatrixXd tau = trig_values(dom, frame.phi.m_phi);

  MatrixXcd moved(N, n);
  for (int j = 0; j < N; ++j) {
    VectorXd dy = VectorXd::Zero(n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < delta.rows(); ++r) dy[c] += delta(r, c) * tau(j, r);
    const Tensor3& gam = frame.gamma_nodes[j];
    for (int i = 0; i < n; ++i) {
      Complex acc = vals(j, i);
      for (int a = 0; a < n; ++a)
        for (int k = 0; k < n; ++k) acc -= gam(i, a, k) * dy[a] * vals(j, k);
      moved(j, i) = acc;
    }
  }
  // L^2 projection back onto the retained modes.
  const MatrixXcd& ev = mode_values(dom);
  const double w = dom.quad_weight();
  VectorXcd out(dom.total_dim());
  for (int ki = 0; ki < dom.n_modes(); ++ki)
    for (int c = 0; c < n; ++c) {
      Complex acc = 0.0;
      for (int j = 0; j < N; ++j) acc += moved(j, c) * std::conj(ev(j, ki));
      out[dom.flat_index(ki, c)] = w * acc;
    }
  return out;
}

AuditReport hypothesis_audit(const Nonlinearity& nl, const CircleDomain& dom,
                             int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw CircleError("hypothesis_audit: sample_count must be >= 1");
  AuditReport rep;
  rep.samples = sample_count;
  rep.c2 = nl.b_min * (nl.p - 1.0) / (nl.p + 1.0);
  rep.c1 = nl.p * nl.b_values.maxCoeff();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(0, dom.n_grid - 1);
  std::uniform_real_distribution<double> mag(0.0, 3.0);

  auto kval = [&](double b, double t) { return b * std::pow(t, nl.p + 1.0) / (nl.p + 1.0); };
  auto fval = [&](double b, double t) { return b * std::pow(t, nl.p - 1.0); };

  for (int i = 0; i < sample_count; ++i) {
    const int j = node(rng);
    const double b = nl.b_values[j];
    const double t = mag(rng);

    // quadratic dominance: <grad K, psi> - 2K >= C2 |psi|^{p+1}
    const double lhs = fval(b, t) * t * t - 2.0 * kval(b, t);
    const double rhs = rep.c2 * std::pow(t, nl.p + 1.0);
    if (lhs + 1e-12 * std::max(1.0, std::abs(rhs)) < rhs) {
      std::ostringstream os;
      os << "quadratic_dominance violated at node " << j << ", |psi| = " << t;
      rep.violations.push_back(os.str());
    }

    // monotone coupling slope with f(0) = 0
    const double t2 = t + mag(rng) + 1e-9;
    if (fval(b, t) > fval(b, t2) + 1e-12 || fval(b, 0.0) != 0.0) {
      std::ostringstream os;
      os << "monotone_f violated at node " << j << " between " << t << " and " << t2;
      rep.violations.push_back(os.str());
    }

    // superquadratic growth: K(lambda psi)/lambda^2 increasing over {1,10,100}
    if (t > 0.0) {
      const double g1 = kval(b, t);
      const double g10 = kval(b, 10.0 * t) / 100.0;
      const double g100 = kval(b, 100.0 * t) / 10000.0;
      if (!(g1 < g10 && g10 < g100)) {
        std::ostringstream os;
        os << "superquadratic_growth violated at node " << j << ", |psi| = " << t;
        rep.violations.push_back(os.str());
      }
    }
  }
  rep.passed = rep.violations.empty();
  return rep;
}

}  // namespace nehari::circle
