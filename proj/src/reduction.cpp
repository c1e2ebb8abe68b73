#include "nehari/reduction.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <random>

namespace nehari::reduction {

using spectral::ModeSign;
using spectral::SpectralModel;

namespace detail {

VectorXcd plus_part(const SpectralModel& model, const VectorXcd& a) {
  VectorXcd out = VectorXcd::Zero(a.size());
  for (int i : model.index_plus) out[i] = a[i];
  return out;
}

double vnorm(const SpectralModel& model, const VectorXcd& a) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += model.vweight(i) * std::norm(a[i]);
  return std::sqrt(s);
}

double vinner(const SpectralModel& model, const VectorXcd& a, const VectorXcd& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i)
    s += model.vweight(i) * (a[i] * std::conj(b[i])).real();
  return s;
}

VectorXcd plus_direction(const SpectralModel& model, const VectorXcd& a,
                         double degenerate_tol) {
  VectorXcd p = plus_part(model, a);
  const double n = vnorm(model, p);
  if (n <= degenerate_tol)
    throw ReductionError("point is H- degenerate: ||v+||_V = " + std::to_string(n));
  return p / n;
}

VectorXcd precondition_dual(const SpectralModel& model, const VectorXcd& dual) {
  VectorXcd out = dual;
  for (int i = 0; i < out.size(); ++i)
    out[i] /= 1.0 + std::abs(model.eigenvalues[i]);
  return out;
}

VectorXcd e2_dual(const FiberProblem& fp, const VectorXcd& g) {
  VectorXcd d = fp.b_grad_dual(g);
  for (int i = 0; i < g.size(); ++i)
    d[i] = fp.model->eigenvalues[i] * g[i] - d[i];
  return d;
}

}  // namespace detail

double e2_energy(const FiberProblem& fp, const VectorXcd& a) {
  double quad = 0.0;
  for (int i = 0; i < a.size(); ++i)
    quad += fp.model->eigenvalues[i] * std::norm(a[i]);
  return 0.5 * quad - fp.b_value(a);
}

NehariResiduals nehari_residuals(const FiberProblem& fp, const VectorXcd& a) {
  const SpectralModel& model = *fp.model;
  const VectorXcd d = fp.b_grad_dual(a);
  NehariResiduals r;
  double quad = 0.0, pair = 0.0, rm = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    quad += model.eigenvalues[i] * std::norm(a[i]);
    pair += (a[i] * std::conj(d[i])).real();
  }
  r.r_scalar = quad - pair;
  for (int i : model.index_minus) {
    const std::complex<double> res =
        (model.eigenvalues[i] * a[i] - d[i]) / (1.0 + std::abs(model.eigenvalues[i]));
    rm += model.vweight(i) * std::norm(res);
  }
  r.r_minus = std::sqrt(rm);
  return r;
}

namespace {

struct InnerWorkspace {
  std::vector<int> minus;
  VectorXd minus_weight;  // |lambda_i| on the minus block
};

// Concave Newton ascent over V- at fixed ray coefficient t.  Unknowns are
// the real/imaginary parts of the minus-mode coefficients of g.
void ascend_minus(const FiberProblem& fp, const InnerWorkspace& ws, double t,
                  const VectorXcd& vhat, VectorXcd& w, double inner_tol, int cap) {
  const int q = static_cast<int>(ws.minus.size());
  if (q == 0) return;
  const SpectralModel& model = *fp.model;

  auto objective = [&](const VectorXcd& wm) {
    return e2_energy(fp, t * vhat + wm);
  };

  for (int it = 0; it < cap; ++it) {
    const VectorXcd g = t * vhat + w;
    const VectorXcd d = fp.b_grad_dual(g);
    VectorXd grad(2 * q);
    for (int r = 0; r < q; ++r) {
      const int i = ws.minus[r];
      grad[r] = -ws.minus_weight[r] * w[i].real() - d[i].real();
      grad[q + r] = -ws.minus_weight[r] * w[i].imag() - d[i].imag();
    }
    if (grad.norm() <= inner_tol) return;

    MatrixXd h = fp.b_hess_real(g, ws.minus);
    for (int r = 0; r < q; ++r) {
      h(r, r) += ws.minus_weight[r];
      h(q + r, q + r) += ws.minus_weight[r];
    }
    // h = -(Hessian of the objective) is positive definite.
    Eigen::LDLT<MatrixXd> ldlt(h);
    VectorXd delta = ldlt.solve(grad);
    if (!delta.allFinite()) return;

    const double base = objective(w);
    double alpha = 1.0;
    for (int ls = 0; ls < 40; ++ls) {
      VectorXcd w_try = w;
      for (int r = 0; r < q; ++r) {
        const int i = ws.minus[r];
        w_try[i] += alpha * std::complex<double>(delta[r], delta[q + r]);
      }
      if (objective(w_try) >= base) {
        w = w_try;
        break;
      }
      alpha *= 0.5;
      if (ls == 39) return;  // no ascent possible: already at numerical optimum
    }
  }
}

// Safeguarded solve of the ray-stationarity equation rho(t) = 0,
// rho(t) = d/dt E2(t vhat + w).  The 1-d slice need not be unimodal for
// arbitrary w, so the first sweep scans globally for the best-energy
// bracket; later sweeps try a local bracket around the previous t first.
double solve_ray(const FiberProblem& fp, const VectorXcd& vhat, const VectorXcd& w,
                 double t_init, double tol, bool global_scan) {
  auto e2_at = [&](double t) { return e2_energy(fp, t * vhat + w); };
  auto rho = [&](double t) {
    const VectorXcd g = t * vhat + w;
    const VectorXcd d = fp.b_grad_dual(g);
    double pair = 0.0;
    for (int i = 0; i < g.size(); ++i) pair += (vhat[i] * std::conj(d[i])).real();
    // <L vhat, vhat> = 1 for a unit positive direction
    return t - pair;
  };

  auto bisect = [&](double lo, double hi, double rlo, double rhi) {
    double t = 0.5 * (lo + hi);
    for (int k = 0; k < 200; ++k) {
      const double mid = (rhi != rlo)
                             ? std::clamp(lo - rlo * (hi - lo) / (rhi - rlo),
                                          lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))
                             : 0.5 * (lo + hi);
      const double rm = rho(mid);
      t = mid;
      if (std::abs(rm) <= tol || hi - lo <= 1e-15 * std::max(1.0, t)) break;
      if (rm > 0.0) {
        lo = mid;
        rlo = rm;
      } else {
        hi = mid;
        rhi = rm;
      }
    }
    return t;
  };

  if (!global_scan && t_init > 0.0) {
    double lo = 0.85 * t_init, hi = 1.15 * t_init;
    double rlo = rho(lo), rhi = rho(hi);
    for (int k = 0; k < 8 && !(rlo > 0.0 && rhi < 0.0); ++k) {
      if (rlo <= 0.0) {
        lo *= 0.7;
        rlo = rho(lo);
      }
      if (rhi >= 0.0) {
        hi *= 1.4;
        rhi = rho(hi);
      }
    }
    if (rlo > 0.0 && rhi < 0.0) return bisect(lo, hi, rlo, rhi);
  }

  // expand until the energy is decreasing well past the maximum
  double t_hi = std::max(1.0, 2.0 * t_init);
  for (int k = 0; k < 60 && rho(t_hi) > 0.0; ++k) t_hi *= 2.0;

  // coarse scan for the best ray point
  const int samples = 96;
  double best_t = t_init > 0 ? t_init : 0.5 * t_hi;
  double best_e = e2_at(best_t);
  for (int i = 1; i <= samples; ++i) {
    const double t = t_hi * i / samples;
    const double e = e2_at(t);
    if (e > best_e) {
      best_e = e;
      best_t = t;
    }
  }

  // bracket a sign change of rho around the scan optimum
  double lo = std::max(best_t - t_hi / samples, 0.0);
  double hi = best_t + t_hi / samples;
  double rlo = rho(lo), rhi = rho(hi);
  for (int k = 0; k < 60 && !(rlo > 0.0 && rhi < 0.0); ++k) {
    if (rlo <= 0.0) lo = std::max(lo - t_hi / samples, 0.0);
    if (rhi >= 0.0) hi += t_hi / samples;
    rlo = rho(lo);
    rhi = rho(hi);
    if (lo == 0.0 && rlo <= 0.0) break;
  }
  if (!(rlo > 0.0 && rhi < 0.0)) return best_t;  // degenerate slice; keep scan point
  return bisect(lo, hi, rlo, rhi);
}

}  // namespace

MaximizerResult maximize_on_halfspace(const FiberProblem& fp, const VectorXcd& a,
                                      const MaximizerOptions& opts) {
  const SpectralModel& model = *fp.model;
  const VectorXcd vplus = detail::plus_part(model, a);
  const double vplus_norm = detail::vnorm(model, vplus);
  if (vplus_norm <= 1e-12)
    throw ReductionError("maximize_on_halfspace: v+ = 0 (point in H-), ||v+||_V = " +
                         std::to_string(vplus_norm));
  const VectorXcd vhat = vplus / vplus_norm;

  InnerWorkspace ws;
  ws.minus.assign(model.index_minus.begin(), model.index_minus.end());
  ws.minus_weight.resize(ws.minus.size());
  for (size_t r = 0; r < ws.minus.size(); ++r)
    ws.minus_weight[static_cast<int>(r)] = std::abs(model.eigenvalues[ws.minus[r]]);

  const double inner_tol = 0.1 * opts.tol;

  struct StartOutcome {
    VectorXcd g;
    double t = 0.0, e2 = 0.0, r_scalar = 0.0, r_minus = 0.0;
    int sweeps = 0;
    bool converged = false;
  };
  std::vector<StartOutcome> outcomes;

  for (int s = 0; s < std::max(1, opts.num_starts); ++s) {
    double t;
    VectorXcd w = VectorXcd::Zero(a.size());
    if (s == 0) {
      t = vplus_norm;
      for (int i : model.index_minus) w[i] = a[i];
    } else {
      std::mt19937_64 rng(opts.seed + 1000003ull * static_cast<std::uint64_t>(s));
      std::uniform_real_distribution<double> tdist(0.2, 2.5);
      std::normal_distribution<double> ndist(0.0, 0.6);
      t = tdist(rng);
      for (int i : model.index_minus) w[i] = std::complex<double>(ndist(rng), ndist(rng));
    }

    StartOutcome out;
    for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
      ascend_minus(fp, ws, t, vhat, w, inner_tol, opts.newton_cap);
      t = solve_ray(fp, vhat, w, t, inner_tol, sweep == 1);
      const VectorXcd g = t * vhat + w;
      const NehariResiduals r = nehari_residuals(fp, g);
      out.sweeps = sweep;
      out.r_scalar = r.r_scalar;
      out.r_minus = r.r_minus;
      if (std::max(std::abs(r.r_scalar), r.r_minus) <= opts.tol) {
        out.converged = true;
        break;
      }
    }
    out.g = t * vhat + w;
    out.t = t;
    out.e2 = e2_energy(fp, out.g);
    outcomes.push_back(std::move(out));
  }

  int best = -1;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].converged) continue;
    if (best < 0 || outcomes[i].e2 > outcomes[best].e2) best = static_cast<int>(i);
  }

  MaximizerResult res;
  if (best < 0) {
    // no start converged: report the first attempt with its residuals
    const StartOutcome& o = outcomes.front();
    res.g = o.g;
    res.t = o.t / vplus_norm;
    res.w_minus = o.g - detail::plus_part(model, o.g);
    res.e2 = o.e2;
    res.r_scalar = o.r_scalar;
    res.r_minus = o.r_minus;
    res.iterations = o.sweeps;
    res.converged = false;
    return res;
  }

  const StartOutcome& o = outcomes[best];
  double spread = 0.0;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].converged) continue;
    for (size_t j = i + 1; j < outcomes.size(); ++j) {
      if (!outcomes[j].converged) continue;
      spread = std::max(spread, detail::vnorm(model, outcomes[i].g - outcomes[j].g));
    }
  }

  res.g = o.g;
  res.t = o.t / vplus_norm;  // coefficient on the input ray
  res.w_minus = o.g - detail::plus_part(model, o.g);
  res.e2 = o.e2;
  res.r_scalar = o.r_scalar;
  res.r_minus = o.r_minus;
  res.iterations = o.sweeps;
  res.multistart_spread = spread;
  res.converged = o.e2 > 0.0;  // a valid maximizer has strictly positive energy
  return res;
}

}  // namespace nehari::reduction
