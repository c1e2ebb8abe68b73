#include "nehari/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace nehari::oracle {

using reduction::FiberProblem;
using spectral::SpectralModel;

namespace {

// Toys live directly in the eigenbasis: identity basis, identity Gram.
std::shared_ptr<const SpectralModel> direct_model(const VectorXd& eigenvalues) {
  auto m = std::make_shared<SpectralModel>();
  const int n = static_cast<int>(eigenvalues.size());
  m->dim = n;
  m->eigenvalues = eigenvalues;
  m->basis = Eigen::MatrixXcd::Identity(n, n);
  m->gram = Eigen::MatrixXcd::Identity(n, n);
  m->identity_gram = true;
  m->kernel_tolerance = 1e-8 * std::max(1e-300, eigenvalues.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    switch (m->sign_of(i)) {
      case spectral::ModeSign::Plus: m->index_plus.push_back(i); break;
      case spectral::ModeSign::Minus: m->index_minus.push_back(i); break;
      case spectral::ModeSign::Zero: m->index_zero.push_back(i); break;
    }
  }
  return m;
}

}  // namespace

ToyProblem make_toy(VectorXd eigenvalues, double p, double coupling, MatrixXd weight) {
  ToyProblem toy;
  std::sort(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  toy.eigenvalues = std::move(eigenvalues);
  toy.p = p;
  toy.coupling = coupling;
  toy.weight = std::move(weight);
  if (!(p > 1.0)) throw OracleError("toy: exponent must satisfy p > 1");
  if (toy.eigenvalues.size() < 2 || toy.eigenvalues.minCoeff() >= 0.0 ||
      toy.eigenvalues.maxCoeff() <= 0.0)
    throw OracleError("toy: need at least one positive and one negative eigenvalue");
  if (toy.weight.rows() != toy.dim() || toy.weight.cols() != toy.dim())
    throw OracleError("toy: weight dimension mismatch");
  if ((toy.weight - toy.weight.transpose()).norm() > 1e-12 * std::max(1.0, toy.weight.norm()))
    throw OracleError("toy: weight must be symmetric");
  return toy;
}

ToyProblem random_toy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(2, 8);
  const int n = dim_dist(rng);
  std::uniform_int_distribution<int> minus_dist(1, std::min(3, n - 1));
  const int n_minus = minus_dist(rng);
  std::uniform_real_distribution<double> lam(0.4, 2.5);
  VectorXd ev(n);
  for (int i = 0; i < n; ++i) {
    const double v = lam(rng);
    ev[i] = i < n_minus ? -v : v;
  }
  const double p_choices[3] = {2.2, 2.5, 3.0};
  std::uniform_int_distribution<int> pidx(0, 2);
  const double p = p_choices[pidx(rng)];
  std::uniform_real_distribution<double> cdist(0.6, 1.5);
  const double coupling = cdist(rng);

  // SPD weight with moderate anisotropy so V+/V- couple through b.
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = gauss(rng);
  const Eigen::HouseholderQR<MatrixXd> qr(q);
  MatrixXd orth = qr.householderQ();
  VectorXd d(n);
  std::uniform_real_distribution<double> ddist(0.6, 1.8);
  for (int i = 0; i < n; ++i) d[i] = ddist(rng);
  MatrixXd weight = orth * d.asDiagonal() * orth.transpose();
  weight = 0.5 * (weight + weight.transpose().eval());
  return make_toy(std::move(ev), p, coupling, std::move(weight));
}

ToyFiber make_toy_fiber(const ToyProblem& toy) {
  ToyFiber out;
  out.toy = toy;
  out.model = direct_model(toy.eigenvalues);

  const MatrixXd m = toy.weight;
  const double c = toy.coupling;
  const double p = toy.p;

  auto radius = [m](const VectorXcd& a) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < a.size(); ++i)
      for (int j = 0; j < a.size(); ++j) acc += m(i, j) * std::conj(a[i]) * a[j];
    return std::sqrt(std::max(0.0, acc.real()));
  };

  out.fp.model = out.model.get();
  out.fp.b_value = [radius, c, p](const VectorXcd& a) {
    return c * std::pow(radius(a), p + 1.0) / (p + 1.0);
  };
  out.fp.b_grad_dual = [m, radius, c, p](const VectorXcd& a) -> VectorXcd {
    const double r = radius(a);
    if (r == 0.0) return VectorXcd::Zero(a.size());
    return (c * std::pow(r, p - 1.0)) * (m * a);
  };
  out.fp.b_hess_real = [m, radius, c, p](const VectorXcd& a,
                                         const std::vector<int>& idx) -> MatrixXd {
    const int q = static_cast<int>(idx.size());
    MatrixXd h = MatrixXd::Zero(2 * q, 2 * q);
    const double r = radius(a);
    if (r == 0.0) return h;
    const VectorXcd u = (m * a) / r;  // M a-hat
    const double scale = c * std::pow(r, p - 1.0);
    for (int ri = 0; ri < q; ++ri) {
      const double ar = u[idx[ri]].real();
      const double br = u[idx[ri]].imag();
      for (int ti = 0; ti < q; ++ti) {
        const double at = u[idx[ti]].real();
        const double bt = u[idx[ti]].imag();
        const double mij = m(idx[ri], idx[ti]);
        h(ri, ti) = scale * ((p - 1.0) * ar * at + mij);
        h(ri, q + ti) = scale * (p - 1.0) * ar * bt;
        h(q + ri, ti) = scale * (p - 1.0) * br * at;
        h(q + ri, q + ti) = scale * ((p - 1.0) * br * bt + mij);
      }
    }
    return h;
  };
  return out;
}

namespace {

// Specialized E2 on (t, real w) for a toy: quadratic expansion of the
// weighted radius keeps grid evaluations O(dim(V-)^2).
struct SliceEval {
  double mvv = 0.0;
  VectorXd mv;      // Re((M vhat)_i) on minus modes
  MatrixXd mm;      // weight restricted to minus modes
  VectorXd lam;     // |lambda_i| on minus modes
  double coupling = 1.0;
  double p = 3.0;

  double e2(double t, const VectorXd& w) const {
    const double r2 = std::max(
        0.0, t * t * mvv + 2.0 * t * mv.dot(w) + w.dot(mm * w));
    const double quad = 0.5 * (t * t - w.cwiseAbs2().dot(lam));
    return quad - coupling * std::pow(r2, 0.5 * (p + 1.0)) / (p + 1.0);
  }
};

}  // namespace

BruteForceResult brute_force_halfspace_max(const ToyFiber& fiber, const VectorXcd& v,
                                           const GridSpec& grid) {
  const SpectralModel& model = *fiber.model;
  const std::vector<int>& minus = model.index_minus;
  const int d = static_cast<int>(minus.size());
  if (d > 3) throw OracleError("brute force limited to dim(V-) <= 3");
  if (v.imag().norm() > 1e-14 * std::max(1.0, v.norm()))
    throw OracleError("brute force expects a real toy point");

  const VectorXcd vhat = reduction::detail::plus_direction(model, v);
  SliceEval se;
  se.coupling = fiber.toy.coupling;
  se.p = fiber.toy.p;
  {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < v.size(); ++i)
      for (int j = 0; j < v.size(); ++j)
        acc += fiber.toy.weight(i, j) * std::conj(vhat[i]) * vhat[j];
    se.mvv = acc.real();
  }
  se.mv.resize(d);
  se.mm.resize(d, d);
  se.lam.resize(d);
  const VectorXcd mvhat_full = fiber.toy.weight * vhat;
  for (int r = 0; r < d; ++r) {
    se.mv[r] = mvhat_full[minus[r]].real();
    se.lam[r] = std::abs(model.eigenvalues[minus[r]]);
    for (int t = 0; t < d; ++t) se.mm(r, t) = fiber.toy.weight(minus[r], minus[t]);
  }

  const int axes = d + 1;
  // level-0 scan over the whole box
  const double h0 = std::max(grid.step, std::max(grid.t_max, 2.0 * grid.w_max) / 40.0);
  std::vector<int> counts(axes);
  counts[0] = static_cast<int>(std::floor(grid.t_max / h0)) + 1;
  for (int a = 1; a < axes; ++a)
    counts[a] = 2 * static_cast<int>(std::floor(grid.w_max / h0)) + 1;

  auto point_at = [&](const std::vector<int>& ix, double h, const VectorXd& origin,
                      double& t, VectorXd& w) {
    t = origin[0] + ix[0] * h;
    for (int a = 1; a < axes; ++a) w[a - 1] = origin[a] + ix[a] * h;
  };

  std::vector<int> ix(axes, 0);
  VectorXd origin = VectorXd::Zero(axes);
  for (int a = 1; a < axes; ++a) origin[a] = -grid.w_max;

  // dense scan utility over the index box given per-axis counts
  auto scan = [&](const VectorXd& org, double h, const std::vector<int>& cnt,
                  std::vector<double>* values) {
    std::vector<int> idx(axes, 0);
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_ix = idx;
    VectorXd w(d);
    double t;
    size_t total = 1;
    for (int a = 0; a < axes; ++a) total *= cnt[a];
    if (values) values->assign(total, 0.0);
    for (size_t lin = 0; lin < total; ++lin) {
      size_t rem = lin;
      for (int a = 0; a < axes; ++a) {
        idx[a] = static_cast<int>(rem % cnt[a]);
        rem /= cnt[a];
      }
      point_at(idx, h, org, t, w);
      const double e = se.e2(t, w);
      if (values) (*values)[lin] = e;
      if (e > best) {
        best = e;
        best_ix = idx;
      }
    }
    return std::make_pair(best, best_ix);
  };

  std::vector<double> level0;
  auto [best_e, best_ix] = scan(origin, h0, counts, &level0);

  // boundary guard on the original box: outer edges mean the box failed to
  // contain the maximizer (the lower t edge is legitimate coarse-grid
  // territory and gets resolved by refinement)
  if (best_ix[0] == counts[0] - 1)
    throw OracleError("brute force: maximizer on grid boundary (grid too small)");
  for (int a = 1; a < axes; ++a)
    if (best_ix[a] == 0 || best_ix[a] == counts[a] - 1)
      throw OracleError("brute force: maximizer on grid boundary (grid too small)");

  // uniqueness evidence from the coarse level: strict interior local maxima
  BruteForceResult res;
  res.unique_basin = true;
  {
    std::vector<int> idx(axes, 0);
    size_t total = level0.size();
    double second_best = -std::numeric_limits<double>::infinity();
    std::vector<int> second_ix;
    for (size_t lin = 0; lin < total; ++lin) {
      size_t rem = lin;
      bool interior = true;
      for (int a = 0; a < axes; ++a) {
        idx[a] = static_cast<int>(rem % counts[a]);
        rem /= counts[a];
        if (idx[a] == 0 || idx[a] == counts[a] - 1) interior = false;
      }
      if (!interior) continue;
      // strict local max over axis neighbors
      bool localmax = true;
      for (int a = 0; a < axes && localmax; ++a) {
        size_t stride = 1;
        for (int b = 0; b < a; ++b) stride *= counts[b];
        if (level0[lin] <= level0[lin - stride] || level0[lin] <= level0[lin + stride])
          localmax = false;
      }
      if (!localmax) continue;
      bool is_best = true;
      for (int a = 0; a < axes; ++a)
        if (idx[a] != best_ix[a]) is_best = false;
      if (is_best) continue;
      if (level0[lin] > second_best) {
        second_best = level0[lin];
        second_ix = idx;
      }
    }
    if (!second_ix.empty()) {
      res.unique_basin = false;
      res.runner_up_gap = best_e - second_best;
      double dist2 = 0.0;
      for (int a = 0; a < axes; ++a) {
        const double diff = (best_ix[a] - second_ix[a]) * h0;
        dist2 += diff * diff;
      }
      res.runner_up_distance = std::sqrt(dist2);
    } else {
      res.runner_up_gap = std::numeric_limits<double>::infinity();
      res.runner_up_distance = std::numeric_limits<double>::infinity();
    }
  }

  // multi-resolution refinement around the incumbent
  double h = h0;
  double t_best;
  VectorXd w_best(d);
  point_at(best_ix, h0, origin, t_best, w_best);
  while (h > grid.step) {
    const double h_next = std::max(grid.step, h / 6.0);
    VectorXd org(axes);
    std::vector<int> cnt(axes);
    org[0] = std::max(0.0, t_best - 4.0 * h);
    cnt[0] = static_cast<int>(std::floor(8.0 * h / h_next)) + 1;
    for (int a = 1; a < axes; ++a) {
      org[a] = std::max(-grid.w_max, w_best[a - 1] - 4.0 * h);
      cnt[a] = cnt[0];
    }
    auto [e_lvl, ix_lvl] = scan(org, h_next, cnt, nullptr);
    (void)e_lvl;
    point_at(ix_lvl, h_next, org, t_best, w_best);
    h = h_next;
  }

  // pattern-search polish with pure evaluations
  double e_cur = se.e2(t_best, w_best);
  double hp = grid.step;
  for (int rounds = 0; hp > 1e-9 && rounds < 20000; ++rounds) {
    bool improved = false;
    for (int a = 0; a < axes; ++a) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        double t_try = t_best;
        VectorXd w_try = w_best;
        if (a == 0)
          t_try = std::max(0.0, t_best + sgn * hp);
        else
          w_try[a - 1] += sgn * hp;
        const double e_try = se.e2(t_try, w_try);
        if (e_try > e_cur) {
          e_cur = e_try;
          t_best = t_try;
          w_best = w_try;
          improved = true;
        }
      }
    }
    if (!improved) hp *= 0.5;
  }

  if (t_best <= grid.step)
    throw OracleError("brute force: maximizer collapsed to the t = 0 boundary");

  res.t = t_best;
  res.w = w_best;
  res.e2 = e_cur;
  res.g = t_best * vhat;
  for (int r = 0; r < d; ++r) res.g[minus[r]] += w_best[r];
  return res;
}

VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                     const VectorXd& point, double step) {
  if (!(step >= 1e-8 && step <= 1e-2))
    throw OracleError("fd_gradient: step must lie in [1e-8, 1e-2]");
  VectorXd g(point.size());
  VectorXd x = point;
  for (int i = 0; i < point.size(); ++i) {
    x[i] = point[i] + step;
    const double fp = f(x);
    x[i] = point[i] - step;
    const double fm = f(x);
    x[i] = point[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw OracleError("fd_gradient: functional returned NaN/inf");
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

ScalarGroundState scalar_ground_state_oracle(double lambda, double b, double p) {
  if (!(lambda > 0.0) || !(b > 0.0) || !(p > 1.0))
    throw OracleError("scalar_ground_state_oracle: need lambda > 0, b > 0, p > 1");
  ScalarGroundState gs;
  gs.t_star = std::pow(lambda / b, 1.0 / (p - 1.0));
  gs.e_star = std::numbers::pi * lambda * gs.t_star * gs.t_star * (p - 1.0) / (p + 1.0);
  return gs;
}

std::vector<InvariantCheck> invariant_suite(
    const FiberProblem& fp, const VectorXcd& a, double tol,
    const std::function<double(const VectorXcd&)>& f_bar) {
  const SpectralModel& model = *fp.model;
  std::vector<InvariantCheck> checks;

  spectral::SplitVector v(a, model);
  const double plus2 = spectral::v_norm_squared(v.plus());
  const double minus2 = spectral::v_norm_squared(v.minus());
  const double all2 = spectral::v_norm_squared(v);
  const double w2 = a.squaredNorm();
  const double scale = std::max(1.0, all2);

  checks.push_back({"plus_part_nonzero", std::sqrt(plus2), 1e-12, std::sqrt(plus2) > 1e-12});

  const reduction::NehariResiduals r = nehari_residuals(fp, a);
  checks.push_back({"scalar_residual", std::abs(r.r_scalar), tol, std::abs(r.r_scalar) <= tol});
  checks.push_back({"minus_residual", r.r_minus, tol, r.r_minus <= tol});

  checks.push_back({"minus_le_plus", minus2 - plus2, tol * scale,
                    minus2 <= plus2 + tol * scale});

  const VectorXcd d = fp.b_grad_dual(a);
  double pair_minus = 0.0;
  for (int i : model.index_minus) pair_minus += (a[i] * std::conj(d[i])).real();
  const double identity_defect = std::abs(minus2 + pair_minus);
  checks.push_back({"minus_pairing_identity", identity_defect, tol * scale,
                    identity_defect <= tol * scale});

  if (f_bar) {
    const double fb = f_bar(a);
    const double chain = all2 - fb * (1.0 + fb) * w2;
    checks.push_back({"norm_growth_chain", chain, tol * scale, chain <= tol * scale});
  }

  const double e2 = e2_energy(fp, a);
  checks.push_back({"positive_fermionic_energy", e2, 0.0, e2 > 0.0});
  return checks;
}

std::function<double(const VectorXcd&)> toy_f_bar(const ToyFiber& fiber) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fiber.toy.weight);
  const double lam_max = es.eigenvalues().maxCoeff();
  const double c = fiber.toy.coupling;
  const double p = fiber.toy.p;
  return [lam_max, c, p](const VectorXcd& a) {
    return c * std::pow(lam_max, 0.5 * (p + 1.0)) * std::pow(a.norm(), p - 1.0);
  };
}

bool all_pass(const std::vector<InvariantCheck>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace nehari::oracle
