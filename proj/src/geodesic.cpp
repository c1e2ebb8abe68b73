#include "nehari/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace nehari::geodesic {

using circle::CircleError;
using circle::FieldFrame;
using spectral::SpectralModel;

double GeodesicConfig::b_at(double s) const {
  return b_const + b_cos * std::cos(s) + b_sin * std::sin(s);
}

namespace {

// Exact spectral model of the untwisted operator: eigenvalues
// -clifford_sign * k sorted ascending, permutation basis.
std::shared_ptr<const SpectralModel> exact_flat_model(const CircleDomain& dom) {
  const int m = dom.total_dim();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> lam(m);
  for (int i = 0; i < dom.n_modes(); ++i)
    for (int c = 0; c < dom.n_fiber; ++c)
      lam[dom.flat_index(i, c)] = -dom.clifford_sign * dom.mode(i);
  std::stable_sort(order.begin(), order.end(),
                   [&lam](int a, int b) { return lam[a] < lam[b]; });

  auto model = std::make_shared<SpectralModel>();
  model->dim = m;
  model->eigenvalues.resize(m);
  model->basis = Eigen::MatrixXcd::Zero(m, m);
  model->gram = Eigen::MatrixXcd::Identity(m, m);
  model->identity_gram = true;
  model->kernel_tolerance = 1e-8 * (dom.k_max - 0.5);
  for (int j = 0; j < m; ++j) {
    model->eigenvalues[j] = lam[order[j]];
    model->basis(order[j], j) = 1.0;
  }
  for (int j = 0; j < m; ++j) {
    switch (model->sign_of(j)) {
      case spectral::ModeSign::Plus: model->index_plus.push_back(j); break;
      case spectral::ModeSign::Minus: model->index_minus.push_back(j); break;
      case spectral::ModeSign::Zero: model->index_zero.push_back(j); break;
    }
  }
  return model;
}

constexpr size_t kCacheCapacity = 8;

}  // namespace

GeodesicContext::GeodesicContext(const GeodesicConfig& cfg)
    : cfg_(cfg),
      dom_(cfg.k_max, cfg.chart == "sphere" ? 2 : cfg.n_fiber, cfg.effective_n_grid(),
           cfg.clifford_sign),
      chart_(circle::make_chart(cfg.chart, dom_.n_fiber)),
      nl_(circle::make_nonlinearity(dom_, cfg.p, [&cfg](double s) { return cfg.b_at(s); })) {}

GeodesicContext build_context(const GeodesicConfig& cfg) { return GeodesicContext(cfg); }

const GeodesicContext::Entry& GeodesicContext::entry(const LoopMap& u) const {
  const std::uint64_t h = u.content_hash();
  for (auto& slot : cache_) {
    if (slot->hash == h && slot->phi.same_content(u)) {
      slot->stamp = ++stamp_;
      return *slot;
    }
  }

  auto fresh = std::make_unique<Entry>();
  Entry& e = *fresh;
  e.phi = u;
  e.hash = h;
  e.stamp = ++stamp_;
  e.frame = std::make_shared<FieldFrame>(circle::build_frame(dom_, u));

  if (e.frame->flat) {
    if (!flat_model_) flat_model_ = exact_flat_model(dom_);
    e.model = flat_model_;
    e.hermiticity_defect = 0.0;
  } else {
    circle::DiracAssembly assembly = circle::assemble_twisted_dirac(*e.frame);
    e.hermiticity_defect = assembly.hermiticity_defect;
    if (assembly.hermiticity_defect > 1e-9)
      throw CircleError(
          "twisted Dirac assembly hermiticity defect " +
          std::to_string(assembly.hermiticity_defect) +
          " exceeds 1e-9 (quadrature aliasing guard)");
    const Eigen::MatrixXcd sym = 0.5 * (assembly.op + assembly.op.adjoint());
    e.model = std::make_shared<SpectralModel>(
        spectral::build_spectral_model(sym, assembly.gram, -1.0));
  }

  // closures capture shared ownership so cache eviction cannot dangle
  auto frame = e.frame;
  auto model = e.model;
  const Nonlinearity nl = nl_;
  e.fp.model = model.get();
  e.fp.b_value = [frame, model, nl](const VectorXcd& a) {
    return circle::k_value(nl, *frame, model->from_eigen(a));
  };
  e.fp.b_grad_dual = [frame, model, nl](const VectorXcd& a) {
    return model->dual_to_eigen(circle::k_gradient(nl, *frame, model->from_eigen(a)));
  };
  e.fp.b_hess_real = [frame, model, nl](const VectorXcd& a, const std::vector<int>& idx) {
    Eigen::MatrixXcd cols(model->dim, idx.size());
    for (size_t r = 0; r < idx.size(); ++r) cols.col(r) = model->basis.col(idx[r]);
    return circle::k_hessian_restricted(nl, *frame, model->from_eigen(a), cols);
  };

  if (cache_.size() >= kCacheCapacity) {
    size_t oldest = 0;
    for (size_t i = 1; i < cache_.size(); ++i)
      if (cache_[i]->stamp < cache_[oldest]->stamp) oldest = i;
    cache_[oldest] = std::move(fresh);
    return *cache_[oldest];
  }
  cache_.push_back(std::move(fresh));
  return *cache_.back();
}

double GeodesicContext::e1(const LoopMap& u) const { return circle::phi_energy(*entry(u).frame); }

reduction::UGradient GeodesicContext::u_gradient(const LoopMap& u,
                                                 const VectorXcd& g_eigen) const {
  const Entry& e = entry(u);
  const VectorXcd psi = e.model->from_eigen(g_eigen);
  const circle::PhiGradient pg = circle::phi_gradient(*e.frame, nl_, psi);
  reduction::UGradient out;
  const int rows = static_cast<int>(pg.dual.rows());
  const int cols = static_cast<int>(pg.dual.cols());
  out.dual.resize(rows * cols);
  out.precond.resize(rows * cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      out.dual[c * rows + r] = pg.dual(r, c);
      out.precond[c * rows + r] = pg.precond(r, c);
    }
  out.norm = circle::phi_grad_norm(pg.precond);
  return out;
}

LoopMap GeodesicContext::u_retract(const LoopMap& u, const VectorXd& dir, double step) const {
  LoopMap out = u;
  const int rows = static_cast<int>(out.coeffs.rows());
  const int cols = static_cast<int>(out.coeffs.cols());
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) out.coeffs(r, c) += step * dir[c * rows + r];
  return out;
}

VectorXcd GeodesicContext::v_transport(const LoopMap& u0, const LoopMap& u1,
                                       const VectorXcd& a) const {
  if (chart_->flat()) return a;  // identity connection and shared model
  if (u0.same_content(u1)) return a;
  const Entry& e0 = entry(u0);
  const VectorXcd psi0 = e0.model->from_eigen(a);
  const Eigen::MatrixXd delta = u1.coeffs - u0.coeffs;
  const VectorXcd moved = circle::transport_spinor(*e0.frame, delta, psi0);
  return entry(u1).model->to_eigen(moved);
}

VectorXcd GeodesicContext::to_modes(const LoopMap& u, const VectorXcd& a_eigen) const {
  return entry(u).model->from_eigen(a_eigen);
}

VectorXcd GeodesicContext::to_eigen(const LoopMap& u, const VectorXcd& modes) const {
  return entry(u).model->to_eigen(modes);
}

LoopMap GeodesicContext::initial_loop(const VectorXi& winding, std::uint64_t seed) const {
  VectorXi w = winding.size() ? winding : VectorXi::Zero(dom_.n_fiber);
  LoopMap phi(chart_, w, cfg_.effective_m_phi());
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < phi.coeffs.cols(); ++c)
    for (int r = 0; r < phi.coeffs.rows(); ++r)
      phi.coeffs(r, c) = cfg_.phi_init_scale * gauss(rng) /
                         (1.0 + circle::trig_mode_of_row(r) * circle::trig_mode_of_row(r));
  return phi;
}

VectorXcd GeodesicContext::initial_spinor(const LoopMap& phi, std::uint64_t seed,
                                          bool negate) const {
  const Entry& e = entry(phi);
  std::mt19937_64 rng(seed * 0xBF58476D1CE4E5B9ull + 3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXcd a = VectorXcd::Zero(e.model->dim);
  for (int i : e.model->index_plus) {
    // bias toward the low modes for a sane starting profile
    const double damp = 1.0 / (1.0 + std::abs(e.model->eigenvalues[i]));
    a[i] = damp * std::complex<double>(gauss(rng), gauss(rng));
  }
  double norm = 0.0;
  for (int i = 0; i < a.size(); ++i) norm += e.model->vweight(i) * std::norm(a[i]);
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) {
    a[e.model->index_plus.front()] = 1.0;
    norm = std::sqrt(e.model->vweight(e.model->index_plus.front()));
  }
  a /= norm;
  if (negate) a = -a;
  return a;
}

double GeodesicContext::f_bar(const LoopMap& u, const VectorXcd& a_eigen) const {
  const Entry& e = entry(u);
  const VectorXcd psi = e.model->from_eigen(a_eigen);
  const Eigen::MatrixXcd vals = circle::spinor_nodes(*e.frame, psi);
  double max_mag = 0.0;
  for (int j = 0; j < dom_.n_grid; ++j) {
    double m2 = 0.0;
    if (e.frame->flat) {
      m2 = vals.row(j).squaredNorm();
    } else {
      const Eigen::MatrixXd& g = e.frame->g_nodes[j];
      std::complex<double> acc = 0.0;
      for (int c = 0; c < dom_.n_fiber; ++c)
        for (int d = 0; d < dom_.n_fiber; ++d)
          acc += g(c, d) * vals(j, c) * std::conj(vals(j, d));
      m2 = acc.real();
    }
    max_mag = std::max(max_mag, std::sqrt(std::max(0.0, m2)));
  }
  return nl_.b_values.maxCoeff() * std::pow(max_mag, nl_.p - 1.0);
}

EnergyParts total_energy(const GeodesicContext& ctx, const LoopMap& phi,
                         const VectorXcd& psi_modes) {
  const GeodesicContext::Entry& e = ctx.entry(phi);
  EnergyParts parts;
  parts.phi_kinetic = circle::phi_energy(*e.frame);
  const VectorXcd a = e.model->to_eigen(psi_modes);
  double quad = 0.0;
  for (int i = 0; i < a.size(); ++i) quad += e.model->eigenvalues[i] * std::norm(a[i]);
  parts.dirac = 0.5 * quad;
  parts.k_term = circle::k_value(ctx.nonlinearity(), *e.frame, psi_modes);
  parts.total = parts.phi_kinetic + parts.dirac - parts.k_term;
  return parts;
}

ElResidual el_residual(const GeodesicContext& ctx, const LoopMap& phi,
                       const VectorXcd& psi_modes) {
  const GeodesicContext::Entry& e = ctx.entry(phi);
  ElResidual out;

  const circle::PhiGradient pg = circle::phi_gradient(*e.frame, ctx.nonlinearity(), psi_modes);
  out.res_phi = circle::phi_grad_norm(pg.precond);

  const VectorXcd a = e.model->to_eigen(psi_modes);
  const VectorXcd d = e.fp.b_grad_dual(a);
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const std::complex<double> r =
        (e.model->eigenvalues[i] * a[i] - d[i]) / (1.0 + std::abs(e.model->eigenvalues[i]));
    acc += e.model->vweight(i) * std::norm(r);
  }
  out.res_psi = std::sqrt(acc);
  return out;
}

namespace {

SolveReport report_from_minimize(const GeodesicContext& ctx,
                                 const reduction::MinimizeResult<LoopMap>& run,
                                 std::uint64_t seed) {
  const GeodesicConfig& cfg = ctx.config();
  SolveReport rep;
  rep.converged = run.converged;
  rep.collapsed = run.collapsed;
  rep.line_search_failed = run.line_search_failed;
  rep.iterations = run.iterations;
  rep.seed = seed;
  rep.k_max = cfg.k_max;
  rep.m_phi = cfg.effective_m_phi();
  rep.n_grid = cfg.effective_n_grid();
  rep.trace = run.trace;
  rep.phi = run.u;
  rep.maximizer_t = run.max.t;

  const SpectralModel& model = *ctx.entry(run.u).model;
  rep.psi_modes = model.from_eigen(run.max.g);
  spectral::SplitVector g(run.max.g, model);
  rep.psi_half = spectral::v_norm(g);
  rep.psi_plus = spectral::v_norm(g.plus());
  rep.psi_minus = spectral::v_norm(g.minus());
  rep.r_scalar = run.max.r_scalar;
  rep.r_minus = run.max.r_minus;

  rep.energies = total_energy(ctx, run.u, rep.psi_modes);
  const ElResidual el = el_residual(ctx, run.u, rep.psi_modes);
  rep.res_phi = el.res_phi;
  rep.res_psi = el.res_psi;

  // trivial-solution guard: a collapsed spinor is not a solution
  if (rep.converged && rep.psi_plus < 1e-6) {
    rep.converged = false;
    rep.collapsed = true;
  }
  return rep;
}

reduction::MinimizeOptions minimize_options(const GeodesicConfig& cfg) {
  reduction::MinimizeOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_outer;
  opts.maximizer.tol = cfg.tol_maximizer;
  opts.maximizer.max_sweeps = cfg.max_maximizer;
  return opts;
}

}  // namespace

SolveReport solve_class(const GeodesicConfig& cfg, const VectorXi& winding,
                        std::vector<SolveReport>* all_runs) {
  GeodesicContext ctx(cfg);
  const reduction::MinimizeOptions opts = minimize_options(cfg);

  struct StartRecord {
    SolveReport report;
    std::uint64_t seed = 0;
  };
  std::vector<StartRecord> records;

  for (int s = 0; s < std::max(1, cfg.multistart); ++s) {
    std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
    SolveReport rep;
    for (int attempt = 0; attempt < 3; ++attempt) {
      const LoopMap phi0 = ctx.initial_loop(winding, seed);
      const VectorXcd v0 = ctx.initial_spinor(phi0, seed, false);
      const auto run = reduction::minimize_reduced(ctx, phi0, v0, opts);
      rep = report_from_minimize(ctx, run, seed);
      if (!rep.collapsed) break;
      seed += 7919;  // collapsed toward the trivial solution: restart
    }
    records.push_back({rep, seed});
    if (all_runs) all_runs->push_back(rep);
  }

  // deterministic merge: best energy among converged, ties by seed
  int best = -1;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!records[i].report.converged) continue;
    if (best < 0 || records[i].report.energies.total < records[best].report.energies.total ||
        (records[i].report.energies.total == records[best].report.energies.total &&
         records[i].seed < records[best].seed))
      best = static_cast<int>(i);
  }
  if (best < 0) {
    // nothing converged: return the last attempt flagged as-is
    return records.back().report;
  }

  SolveReport result = records[best].report;

  // Z2 pairing audit: re-solve from the negated spinor start
  {
    const std::uint64_t seed = records[best].seed;
    const LoopMap phi0 = ctx.initial_loop(winding, seed);
    const VectorXcd v0 = ctx.initial_spinor(phi0, seed, true);
    const auto run = reduction::minimize_reduced(ctx, phi0, v0, opts);
    const SolveReport partner = report_from_minimize(ctx, run, seed);
    if (partner.converged) {
      result.z2_energy_gap = std::abs(partner.energies.total - result.energies.total);
      result.z2_spinor_defect = (partner.psi_modes + result.psi_modes).norm();
    }
  }
  return result;
}

std::vector<RefineRow> refine_check(const GeodesicConfig& cfg,
                                    const std::vector<int>& k_list) {
  if (k_list.empty()) throw CircleError("refine_check: empty truncation list");
  std::vector<RefineRow> rows;
  for (size_t i = 0; i < k_list.size(); ++i) {
    GeodesicConfig level = cfg;
    level.k_max = k_list[i];
    level.m_phi = cfg.m_phi < 0 ? -1 : cfg.m_phi;        // keep defaults re-derived
    level.n_grid = cfg.n_grid < 0 ? -1 : cfg.n_grid;
    const SolveReport rep = solve_class(level, cfg.winding, nullptr);
    RefineRow row;
    row.k_max = k_list[i];
    row.converged = rep.converged;
    row.energy = rep.energies.total;
    row.psi_half = rep.psi_half;
    if (i > 0 && rows.back().converged && rep.converged) {
      const double prev = rows.back().energy;
      row.energy_drift = (prev - row.energy) / std::max(1e-300, std::abs(prev));
      row.psi_half_drift = std::abs(row.psi_half - rows.back().psi_half) /
                           std::max(1e-300, rows.back().psi_half);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nehari::geodesic
