// Generalized Nehari-manifold reduction over an abstract fiber problem
//   E2(u, v) = 1/2 <L_u v, v> - b(u, v),
// working in the eigenbasis of the current spectral model.  Provides the
// unique half-space maximizer g_u(v) on F_u(v) = R+ v (+) V-, the Nehari
// constraint residuals, the reduced functional E~(u, v) = E1(u) + E2(u, g)
// with its gradient structure, and descent on E~ over (u, direction of v+).

#pragma once

#include "nehari/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nehari::reduction {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct ReductionError : std::runtime_error {
  explicit ReductionError(const std::string& what) : std::runtime_error(what) {}
};

// The v-side of the problem at a fixed u.  All vectors are eigenbasis
// coefficients of *model; duals pair as Re(h^H d).
struct FiberProblem {
  const spectral::SpectralModel* model = nullptr;
  std::function<double(const VectorXcd&)> b_value;
  std::function<VectorXcd(const VectorXcd&)> b_grad_dual;
  // Hessian of b restricted to the real span of the eigenvectors listed in
  // idx (and their i-multiples); coordinate order (x..., y...).
  std::function<MatrixXd(const VectorXcd&, const std::vector<int>&)> b_hess_real;
};

double e2_energy(const FiberProblem& fp, const VectorXcd& a);

struct NehariResiduals {
  double r_scalar = 0.0;  // <Lv,v> - <grad_v b, v>
  double r_minus = 0.0;   // (1+|L|)^{-1}-preconditioned dual norm of P-(Lv - grad_v b)
};

NehariResiduals nehari_residuals(const FiberProblem& fp, const VectorXcd& a);

struct MaximizerOptions {
  double tol = 1e-10;
  int max_sweeps = 500;
  int newton_cap = 60;
  int num_starts = 1;
  std::uint64_t seed = 0;
};

struct MaximizerResult {
  VectorXcd g;        // maximizer, eigen coefficients
  double t = 0.0;     // ray coefficient: ||g+||_V / ||v+||_V
  VectorXcd w_minus;  // minus part of g
  double e2 = 0.0;
  double r_scalar = 0.0;
  double r_minus = 0.0;
  int iterations = 0;
  double multistart_spread = 0.0;  // max pairwise V-distance of converged starts
  bool converged = false;
};

// Stationary point of E2(u, .) on R+ v (+) V-; requires v+ != 0.  Alternates
// a concave Newton ascent over V- with a safeguarded scalar solve along the
// ray; the result depends only on the ray of v+.
MaximizerResult maximize_on_halfspace(const FiberProblem& fp, const VectorXcd& a,
                                      const MaximizerOptions& opts);

// ---- reduced functional over a context ------------------------------------

struct UGradient {
  VectorXd dual;     // energy derivative per u coefficient
  VectorXd precond;  // preconditioned descent direction
  double norm = 0.0;
};

template <class C>
concept ReductionContext = requires(const C& ctx, const typename C::UState& u,
                                    const VectorXcd& a, const VectorXd& dir, double step) {
  { ctx.fiber(u) } -> std::convertible_to<const FiberProblem&>;
  { ctx.e1(u) } -> std::convertible_to<double>;
  { ctx.u_gradient(u, a) } -> std::convertible_to<UGradient>;
  { ctx.u_retract(u, dir, step) } -> std::convertible_to<typename C::UState>;
  { ctx.v_transport(u, u, a) } -> std::convertible_to<VectorXcd>;
};

struct ReducedEval {
  MaximizerResult max;
  double e1 = 0.0;
  double energy = 0.0;  // e1 + max.e2
};

struct ReducedGradient {
  double t_ratio = 0.0;   // ||g+||_V / ||v+||_V
  VectorXcd v_dual;       // t * (Lambda g - grad b)(g), full eigen dual
  VectorXcd v_precond;    // (1+|L|)^{-1} of v_dual
  UGradient u;
};

struct TraceRecord {
  int iter = 0;
  double energy = 0.0;
  double r_scalar = 0.0;
  double r_minus = 0.0;
  double grad_u = 0.0;
  double grad_v = 0.0;
  double step = 0.0;
};

struct MinimizeOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  MaximizerOptions maximizer;
  double armijo_c = 1e-4;
  double step_min = 1e-14;
  double collapse_tol = 1e-6;
};

template <class U>
struct MinimizeResult {
  U u;
  VectorXcd v;  // unit plus-direction in the final model
  MaximizerResult max;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  bool collapsed = false;
  bool line_search_failed = false;
  std::vector<TraceRecord> trace;
};

namespace detail {
VectorXcd plus_direction(const spectral::SpectralModel& model, const VectorXcd& a,
                         double degenerate_tol = 1e-12);
VectorXcd precondition_dual(const spectral::SpectralModel& model, const VectorXcd& dual);
double vnorm(const spectral::SpectralModel& model, const VectorXcd& a);
double vinner(const spectral::SpectralModel& model, const VectorXcd& a, const VectorXcd& b);
}  // namespace detail

namespace detail {
// full eigen dual of d_v E2 at g: Lambda g - grad b
VectorXcd e2_dual(const FiberProblem& fp, const VectorXcd& g);
VectorXcd plus_part(const spectral::SpectralModel& model, const VectorXcd& a);
}  // namespace detail

template <ReductionContext C>
ReducedEval reduced_eval(const C& ctx, const typename C::UState& u, const VectorXcd& a,
                         const MaximizerOptions& opts) {
  ReducedEval ev;
  ev.max = maximize_on_halfspace(ctx.fiber(u), a, opts);
  ev.e1 = ctx.e1(u);
  ev.energy = ev.e1 + ev.max.e2;
  return ev;
}

template <ReductionContext C>
double reduced_energy(const C& ctx, const typename C::UState& u, const VectorXcd& a,
                      const MaximizerOptions& opts) {
  return reduced_eval(ctx, u, a, opts).energy;
}

// Gradient of the reduced functional at (u, a), given the maximizer at that
// point: the v-derivative is t_u(v) * d_v E2(u, g) with
// t_u(v) = ||g+||_V / ||v+||_V, and the u-derivative is the context's
// energy gradient evaluated at g.
template <ReductionContext C>
ReducedGradient reduced_gradient(const C& ctx, const typename C::UState& u,
                                 const VectorXcd& a, const MaximizerResult& max) {
  const FiberProblem& fp = ctx.fiber(u);
  const spectral::SpectralModel& model = *fp.model;
  const double vplus_norm = detail::vnorm(model, detail::plus_part(model, a));
  if (!(vplus_norm > 0.0))
    throw ReductionError("reduced_gradient: v+ = 0 (point in H-)");
  ReducedGradient gr;
  const double gplus_norm = detail::vnorm(model, detail::plus_part(model, max.g));
  gr.t_ratio = gplus_norm / vplus_norm;
  gr.v_dual = gr.t_ratio * detail::e2_dual(fp, max.g);
  gr.v_precond = detail::precondition_dual(model, gr.v_dual);
  gr.u = ctx.u_gradient(u, max.g);
  return gr;
}

// Descent on E~ over (u, direction of v+ on the V-norm unit sphere of V+):
// preconditioned gradient steps with Armijo backtracking; the sphere
// retraction is plus-projection followed by normalization, and v rides
// along the context's transport whenever u moves.
template <ReductionContext C>
MinimizeResult<typename C::UState> minimize_reduced(const C& ctx,
                                                    const typename C::UState& u0,
                                                    const VectorXcd& v0,
                                                    const MinimizeOptions& opts) {
  using U = typename C::UState;
  MinimizeResult<U> res;
  res.u = u0;

  const spectral::SpectralModel* model = ctx.fiber(res.u).model;
  VectorXcd vhat = detail::plus_direction(*model, v0, opts.collapse_tol);
  VectorXcd carry = v0;  // warm-start memory: previous maximizer, transported

  double step_prev = 1.0;
  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    const FiberProblem& fp = ctx.fiber(res.u);
    model = fp.model;

    // evaluate at the current point, warm-started along the previous ray
    VectorXcd a_in = vhat;
    {
      const VectorXcd wm = carry - detail::plus_part(*model, carry);
      const double tprev = detail::vnorm(*model, detail::plus_part(*model, carry));
      a_in = (tprev > opts.collapse_tol ? tprev : 1.0) * vhat + wm;
    }
    ReducedEval ev = reduced_eval(ctx, res.u, a_in, opts.maximizer);
    ReducedGradient gr = reduced_gradient(ctx, res.u, a_in, ev.max);

    // tangent projection on the V-sphere at vhat
    VectorXcd gv = gr.v_precond;
    gv -= detail::vinner(*model, gv, vhat) * vhat;
    const double gv_norm = detail::vnorm(*model, gv);
    const double gu_norm = gr.u.norm;

    res.trace.push_back({iter, ev.energy, ev.max.r_scalar, ev.max.r_minus, gu_norm,
                         gv_norm, 0.0});
    res.energy = ev.energy;
    res.max = ev.max;
    res.v = vhat;
    res.iterations = iter;

    const bool residuals_ok = ev.max.converged &&
                              std::abs(ev.max.r_scalar) <= opts.tol &&
                              ev.max.r_minus <= opts.tol;
    if (residuals_ok && gv_norm <= opts.tol && gu_norm <= opts.tol) {
      res.converged = true;
      break;
    }
    if (iter == opts.max_iter) break;

    // expected decrease along the preconditioned directions
    double dd = 0.0;
    for (int i = 0; i < gv.size(); ++i)
      dd += (gv[i] * std::conj(gr.v_dual[i])).real();
    if (gr.u.dual.size()) dd += gr.u.dual.dot(gr.u.precond);
    dd = std::max(dd, 1e-12 * (gv_norm * gv_norm + gu_norm * gu_norm));

    double step = std::min(1.0, 2.0 * step_prev);
    bool accepted = false;
    while (step >= opts.step_min) {
      // a trial point whose assembly or maximization fails counts as a
      // rejected step (wild trials can violate quadrature guards)
      try {
        U u_trial = gr.u.precond.size()
                        ? ctx.u_retract(res.u, gr.u.precond, -step)
                        : res.u;
        const VectorXcd v_trial_old = vhat - step * gv;
        const VectorXcd v_moved = ctx.v_transport(res.u, u_trial, v_trial_old);
        const VectorXcd g_moved = ctx.v_transport(res.u, u_trial, ev.max.g);

        const spectral::SpectralModel* model_trial = ctx.fiber(u_trial).model;
        const VectorXcd vplus = detail::plus_part(*model_trial, v_moved);
        const double vplus_norm = detail::vnorm(*model_trial, vplus);
        if (vplus_norm <= opts.collapse_tol * std::max(1.0, v_moved.norm())) {
          res.collapsed = true;
          break;
        }
        const VectorXcd vhat_trial = vplus / vplus_norm;
        VectorXcd a_trial = g_moved - detail::plus_part(*model_trial, g_moved);
        const double tprev =
            detail::vnorm(*model_trial, detail::plus_part(*model_trial, g_moved));
        a_trial += (tprev > opts.collapse_tol ? tprev : 1.0) * vhat_trial;

        const ReducedEval trial = reduced_eval(ctx, u_trial, a_trial, opts.maximizer);
        // sufficient decrease up to floating-point granularity of the energy
        const double fp_slack = 1e-15 * std::max(1.0, std::abs(ev.energy));
        if (trial.max.converged &&
            trial.energy <= ev.energy - opts.armijo_c * step * dd + fp_slack) {
          res.u = u_trial;
          vhat = vhat_trial;
          carry = trial.max.g;
          res.trace.back().step = step;
          step_prev = step;
          accepted = true;
          break;
        }
      } catch (const std::exception&) {
        // fall through to step reduction
      }
      step *= 0.5;
    }
    if (res.collapsed) break;
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }
  }
  return res;
}

}  // namespace nehari::reduction
