// Independent brute-force and finite-difference oracles.  Everything here is
// deliberately dumb: grid scans, pattern-search polish, central differences,
// closed forms.  The solver is never called from this module, so oracle
// verdicts stay independent of the implementation paths they certify.

#pragma once

#include "nehari/reduction.hpp"
#include "nehari/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace nehari::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

// Finite-dimensional surrogate: L = diag(eigenvalues), b(v) =
// coupling * (v^H M v)^{(p+1)/2} / (p+1) with an SPD weight M.
struct ToyProblem {
  VectorXd eigenvalues;  // ascending; at least one of each sign
  double p = 3.0;
  double coupling = 1.0;
  MatrixXd weight;  // SPD

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

ToyProblem make_toy(VectorXd eigenvalues, double p, double coupling, MatrixXd weight);
ToyProblem random_toy(std::uint64_t seed);

// FiberProblem (and the model it references) for a toy; the holder keeps the
// model alive for the closures.
struct ToyFiber {
  std::shared_ptr<const spectral::SpectralModel> model;
  reduction::FiberProblem fp;
  ToyProblem toy;
};

ToyFiber make_toy_fiber(const ToyProblem& toy);

// Trivial-u context for the reduction templates.
class ToyContext {
 public:
  using UState = std::monostate;
  explicit ToyContext(const ToyProblem& toy) : fiber_(make_toy_fiber(toy)) {}
  const reduction::FiberProblem& fiber(const UState&) const { return fiber_.fp; }
  double e1(const UState&) const { return 0.0; }
  reduction::UGradient u_gradient(const UState&, const VectorXcd&) const { return {}; }
  UState u_retract(const UState& u, const VectorXd&, double) const { return u; }
  VectorXcd v_transport(const UState&, const UState&, const VectorXcd& a) const { return a; }
  const ToyFiber& holder() const { return fiber_; }

 private:
  ToyFiber fiber_;
};

struct GridSpec {
  double t_max = 3.0;
  double w_max = 3.0;
  double step = 1e-3;  // final per-axis resolution
};

struct BruteForceResult {
  double t = 0.0;       // coefficient along the unit plus direction
  VectorXd w = {};      // real minus-mode coefficients
  VectorXcd g = {};     // assembled maximizer in eigen coordinates
  double e2 = 0.0;
  double runner_up_gap = 0.0;       // value gap to the second grid basin
  double runner_up_distance = 0.0;  // parameter distance to it
  bool unique_basin = true;         // no second interior local maximum found
};

// Grid search over (t, w) in R+ x V- (real coordinates; for real toys the
// maximizer is real by conjugation symmetry), multi-resolution refinement,
// then a pattern-search polish.  Throws OracleError when the maximizer sits
// on the original grid boundary.
BruteForceResult brute_force_halfspace_max(const ToyFiber& fiber, const VectorXcd& v,
                                           const GridSpec& grid);

// Central finite differences of a scalar functional, step in [1e-8, 1e-2].
VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                     const VectorXd& point, double step);

// Maximizes a smooth scalar function on [a, b] by golden-section search.
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12);

// Single-constant-magnitude-mode ray solution: lambda t = b t^p gives the
// pointwise magnitude t_star = (lambda/b)^{1/(p-1)} and circle-integrated
// fermionic energy e_star = pi lambda t_star^2 (p-1)/(p+1).
struct ScalarGroundState {
  double t_star = 0.0;
  double e_star = 0.0;
};

ScalarGroundState scalar_ground_state_oracle(double lambda, double b, double p);

// ---- invariant suite --------------------------------------------------------

struct InvariantCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// Evaluates the Nehari-point invariants at a claimed point: both constraint
// residuals, v+ != 0, the minus/plus norm comparison, the minus-pairing
// identity, the norm-growth chain (with the problem's norm-bound functional
// f_bar), and positivity of the fermionic energy.
std::vector<InvariantCheck> invariant_suite(
    const reduction::FiberProblem& fp, const VectorXcd& a, double tol,
    const std::function<double(const VectorXcd&)>& f_bar);

// f_bar for a toy problem: coupling * lam_max(M)^{(p+1)/2} |a|_W^{p-1}.
std::function<double(const VectorXcd&)> toy_f_bar(const ToyFiber& fiber);

bool all_pass(const std::vector<InvariantCheck>& checks);

}  // namespace nehari::oracle
