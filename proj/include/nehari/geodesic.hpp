// Wires the circle operators into a reduction context for the perturbed
// Dirac-geodesic energy, solves per homotopy class, and verifies the
// Euler-Lagrange system of the critical points.

#pragma once

#include "nehari/circle.hpp"
#include "nehari/reduction.hpp"
#include "nehari/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace nehari::geodesic {

using circle::CircleDomain;
using circle::LoopMap;
using circle::Nonlinearity;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

struct GeodesicConfig {
  int k_max = 16;
  int m_phi = -1;   // < 0: default k_max
  int n_grid = -1;  // < 0: default 4 * k_max
  int clifford_sign = +1;
  std::string chart = "flat_torus";
  int n_fiber = 1;  // sphere chart forces 2
  double p = 3.0;
  double b_const = 1.0;
  double b_cos = 0.0;
  double b_sin = 0.0;
  VectorXi winding;  // empty: all-zero
  int multistart = 1;
  std::uint64_t seed = 1;
  double phi_init_scale = 0.01;
  double tol = 1e-8;
  double tol_maximizer = 1e-10;
  int max_outer = 5000;
  int max_maximizer = 500;

  int effective_m_phi() const { return m_phi < 0 ? k_max : m_phi; }
  // curved charts get quadrature headroom: the composite metric integrands
  // are smooth but not band-limited
  int effective_n_grid() const {
    return n_grid < 0 ? (chart == "flat_torus" ? 4 : 8) * k_max : n_grid;
  }
  double b_at(double s) const;
};

// Reduction context for the geodesic energy.  The spectral model of the
// twisted Dirac operator is rebuilt whenever phi moves (cached by content);
// flat charts share a single exact model.
class GeodesicContext {
 public:
  using UState = LoopMap;

  explicit GeodesicContext(const GeodesicConfig& cfg);

  const CircleDomain& domain() const { return dom_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  const std::shared_ptr<const circle::Chart>& chart() const { return chart_; }
  const GeodesicConfig& config() const { return cfg_; }

  struct Entry {
    LoopMap phi;
    std::shared_ptr<const circle::FieldFrame> frame;
    std::shared_ptr<const spectral::SpectralModel> model;
    reduction::FiberProblem fp;
    double hermiticity_defect = 0.0;
    std::uint64_t hash = 0;
    std::uint64_t stamp = 0;
  };

  // Reference valid until later entry() calls evict this slot (small LRU);
  // hold the shared_ptr members, not the Entry, across phi moves.
  const Entry& entry(const LoopMap& u) const;

  // reduction context surface
  const reduction::FiberProblem& fiber(const LoopMap& u) const { return entry(u).fp; }
  double e1(const LoopMap& u) const;
  reduction::UGradient u_gradient(const LoopMap& u, const VectorXcd& g_eigen) const;
  LoopMap u_retract(const LoopMap& u, const VectorXd& dir, double step) const;
  VectorXcd v_transport(const LoopMap& u0, const LoopMap& u1, const VectorXcd& a) const;

  VectorXcd to_modes(const LoopMap& u, const VectorXcd& a_eigen) const;
  VectorXcd to_eigen(const LoopMap& u, const VectorXcd& modes) const;

  LoopMap initial_loop(const VectorXi& winding, std::uint64_t seed) const;
  VectorXcd initial_spinor(const LoopMap& phi, std::uint64_t seed, bool negate) const;

  // bound used by the norm-growth-chain audit:
  // max_s b(s) * (max_s |psi(s)|_g)^{p-1}
  double f_bar(const LoopMap& u, const VectorXcd& a_eigen) const;

 private:
  GeodesicConfig cfg_;
  CircleDomain dom_;
  std::shared_ptr<const circle::Chart> chart_;
  Nonlinearity nl_;
  mutable std::vector<std::unique_ptr<Entry>> cache_;
  mutable std::uint64_t stamp_ = 0;
  mutable std::shared_ptr<const spectral::SpectralModel> flat_model_;
};

GeodesicContext build_context(const GeodesicConfig& cfg);

struct EnergyParts {
  double phi_kinetic = 0.0;
  double dirac = 0.0;   // 1/2 <D_phi psi, psi>
  double k_term = 0.0;  // integral of K
  double total = 0.0;
};

EnergyParts total_energy(const GeodesicContext& ctx, const LoopMap& phi,
                         const VectorXcd& psi_modes);

struct ElResidual {
  double res_phi = 0.0;
  double res_psi = 0.0;
};

ElResidual el_residual(const GeodesicContext& ctx, const LoopMap& phi,
                       const VectorXcd& psi_modes);

struct SolveReport {
  bool converged = false;
  bool collapsed = false;
  bool line_search_failed = false;
  EnergyParts energies;
  double res_phi = 0.0;
  double res_psi = 0.0;
  double r_scalar = 0.0;
  double r_minus = 0.0;
  double psi_half = 0.0;
  double psi_plus = 0.0;
  double psi_minus = 0.0;
  double maximizer_t = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  int k_max = 0, m_phi = 0, n_grid = 0;
  double z2_energy_gap = std::numeric_limits<double>::quiet_NaN();
  double z2_spinor_defect = std::numeric_limits<double>::quiet_NaN();
  LoopMap phi;
  VectorXcd psi_modes;
  std::vector<reduction::TraceRecord> trace;
};

// Minimizes the reduced energy in the given winding class from
// cfg.multistart seeded starts; returns the best converged report (or the
// best attempt, flagged).  all_runs receives every start's report when
// non-null.  The best run is paired with a negated-spinor re-solve for the
// Z2 equivariance audit.
SolveReport solve_class(const GeodesicConfig& cfg, const VectorXi& winding,
                        std::vector<SolveReport>* all_runs = nullptr);

struct RefineRow {
  int k_max = 0;
  bool converged = false;
  double energy = 0.0;
  double psi_half = 0.0;
  double energy_drift = std::numeric_limits<double>::quiet_NaN();    // vs previous row
  double psi_half_drift = std::numeric_limits<double>::quiet_NaN();  // relative
};

std::vector<RefineRow> refine_check(const GeodesicConfig& cfg,
                                    const std::vector<int>& k_list);

}  // namespace nehari::geodesic
