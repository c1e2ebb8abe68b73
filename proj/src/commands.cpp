#include "nehari/commands.hpp"

#include "nehari/oracle.hpp"
#include "nehari/solution_io.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <ostream>
#include <random>

namespace nehari::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
  geodesic::GeodesicContext ctx(cfg.geo);
  geodesic::LoopMap phi(ctx.chart(),
                        cfg.geo.winding.size() ? cfg.geo.winding
                                               : Eigen::VectorXi::Zero(ctx.domain().n_fiber),
                        cfg.geo.effective_m_phi());
  const circle::FieldFrame frame = circle::build_frame(ctx.domain(), phi);
  const circle::DiracAssembly assembly = circle::assemble_twisted_dirac(frame);
  const Eigen::MatrixXcd sym = 0.5 * (assembly.op + assembly.op.adjoint());
  const spectral::SpectralModel model =
      spectral::build_spectral_model(sym, assembly.gram, -1.0);

  const double scale = std::max(1.0, sym.norm());
  out << "index,eigenvalue,recon_residual,hermiticity_defect\n";
  for (int i = 0; i < model.dim; ++i) {
    const Eigen::VectorXcd x = model.basis.col(i);
    const double resid =
        (sym * x - model.eigenvalues[i] * (model.gram * x)).norm() / scale;
    out << i << "," << format_double(model.eigenvalues[i]) << "," << format_double(resid)
        << "," << format_double(assembly.hermiticity_defect) << "\n";
  }
  return kExitOk;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  std::vector<geodesic::SolveReport> runs;
  const geodesic::SolveReport report = geodesic::solve_class(cfg.geo, cfg.geo.winding, &runs);

  fs::create_directories(cfg.out_dir);
  write_solution((fs::path(cfg.out_dir) / "solution.txt").string(), cfg, report);

  {
    std::ofstream log(fs::path(cfg.out_dir) / "solve_log.jsonl", std::ios::trunc);
    for (const auto& t : report.trace) {
      json row = {{"iter", t.iter},         {"energy", t.energy},
                  {"r_scalar", t.r_scalar}, {"r_minus", t.r_minus},
                  {"grad_u", t.grad_u},     {"grad_v", t.grad_v},
                  {"step", t.step}};
      log << row.dump() << "\n";
    }
  }

  if (cfg.log != "quiet") {
    out << "converged = " << (report.converged ? "true" : "false") << "\n";
    out << "energy = " << format_double(report.energies.total) << "\n";
    out << "residual_phi = " << format_double(report.res_phi) << "\n";
    out << "residual_psi = " << format_double(report.res_psi) << "\n";
    out << "psi_half_norm = " << format_double(report.psi_half) << "\n";
    out << "iterations = " << report.iterations << "\n";
    if (std::isfinite(report.z2_energy_gap))
      out << "z2_energy_gap = " << format_double(report.z2_energy_gap) << "\n";
  }
  return report.converged ? kExitOk : kExitNoConverge;
}

namespace {

struct Verdict {
  std::string name;
  double value;
  double threshold;
  bool enforced;
  bool pass;
};

void print_verdicts(const std::vector<Verdict>& rows, std::ostream& out) {
  out << "check,value,threshold,enforced,pass\n";
  for (const auto& v : rows)
    out << v.name << "," << format_double(v.value) << "," << format_double(v.threshold)
        << "," << (v.enforced ? "yes" : "no") << "," << (v.pass ? "pass" : "FAIL") << "\n";
}

}  // namespace

int cmd_verify(const std::string& solution_path, std::ostream& out) {
  SolutionData sol;
  try {
    sol = read_solution(solution_path);
  } catch (const std::exception& e) {
    out << "malformed solution file: " << e.what() << "\n";
    return kExitBadInput;
  }

  try {
    geodesic::GeodesicContext ctx(sol.config.geo);
    const geodesic::LoopMap phi = loop_from_solution(sol, ctx);
    const double tol = sol.config.geo.tol;

    const geodesic::EnergyParts energies = total_energy(ctx, phi, sol.psi_modes);
    const geodesic::ElResidual el = el_residual(ctx, phi, sol.psi_modes);

    std::vector<Verdict> rows;
    auto consistency = [&rows](const std::string& name, double stored, double got) {
      const double defect = std::abs(got - stored);
      const double thr = 1e-12 * std::max(1.0, std::abs(stored));
      rows.push_back({name, defect, thr, true, defect <= thr});
    };
    consistency("energy_footer_consistency", sol.energy, energies.total);
    consistency("residual_phi_footer_consistency", sol.residual_phi, el.res_phi);
    consistency("residual_psi_footer_consistency", sol.residual_psi, el.res_psi);

    const Eigen::VectorXcd a = ctx.to_eigen(phi, sol.psi_modes);
    const auto& fp = ctx.fiber(phi);
    auto fbar = [&ctx, &phi](const Eigen::VectorXcd& v) { return ctx.f_bar(phi, v); };
    const auto checks = oracle::invariant_suite(fp, a, 10.0 * tol, fbar);
    for (const auto& c : checks)
      rows.push_back({c.name, c.value, c.threshold, sol.converged, c.pass});

    rows.push_back({"el_residual_phi", el.res_phi, 10.0 * tol, sol.converged,
                    el.res_phi <= 10.0 * tol});
    rows.push_back({"el_residual_psi", el.res_psi, 10.0 * tol, sol.converged,
                    el.res_psi <= 10.0 * tol});

    print_verdicts(rows, out);
    for (const auto& r : rows)
      if (r.enforced && !r.pass) return kExitVerifyFail;
    return kExitOk;
  } catch (const std::exception& e) {
    out << "verification error: " << e.what() << "\n";
    return kExitVerifyFail;
  }
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  if (cfg.sweep_axis.empty() || cfg.sweep_values.empty()) {
    out << "sweep: axis and values required (sweep_axis, sweep_values)\n";
    return kExitBadInput;
  }
  out << "axis,value,converged,energy,r_scalar,r_minus,res_phi,res_psi,"
         "psi_half,psi_plus,psi_minus\n";
  int converged_rows = 0;
  for (const std::string& value : cfg.sweep_values) {
    RunConfig row_cfg = cfg;
    Eigen::VectorXi winding = cfg.geo.winding;
    try {
      if (cfg.sweep_axis == "winding") {
        std::string v = value;
        for (auto& ch : v)
          if (ch == ':') ch = ',';
        winding = parse_winding(v);
        row_cfg.geo.winding = winding;
      } else if (cfg.sweep_axis == "p") {
        row_cfg.geo.p = std::stod(value);
      } else if (cfg.sweep_axis == "k_max") {
        row_cfg.geo.k_max = std::stoi(value);
      }
    } catch (const std::exception&) {
      out << cfg.sweep_axis << "," << value << ",parse-error,,,,,,,,\n";
      continue;
    }
    try {
      const geodesic::SolveReport rep = geodesic::solve_class(row_cfg.geo, winding, nullptr);
      if (rep.converged) ++converged_rows;
      out << cfg.sweep_axis << "," << value << "," << (rep.converged ? "true" : "false")
          << "," << format_double(rep.energies.total) << "," << format_double(rep.r_scalar)
          << "," << format_double(rep.r_minus) << "," << format_double(rep.res_phi) << ","
          << format_double(rep.res_psi) << "," << format_double(rep.psi_half) << ","
          << format_double(rep.psi_plus) << "," << format_double(rep.psi_minus) << "\n";
    } catch (const std::exception& e) {
      out << cfg.sweep_axis << "," << value << ",error(" << e.what() << "),,,,,,,,\n";
    }
  }
  return converged_rows > 0 ? kExitOk : kExitNoConverge;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  out << "check,metric,value,threshold,pass\n";
  bool all_ok = true;
  auto emit = [&](const std::string& check, const std::string& metric, double value,
                  double threshold, bool pass) {
    out << check << "," << metric << "," << format_double(value) << ","
        << format_double(threshold) << "," << (pass ? "pass" : "FAIL") << "\n";
    all_ok = all_ok && pass;
  };

  // solver vs brute-force oracle on random toys
  const int n_toys = 20;
  oracle::GridSpec grid;
  grid.t_max = 12.0;
  grid.w_max = 9.0;
  grid.step = 1e-3;
  for (int i = 0; i < n_toys; ++i) {
    const std::uint64_t seed = cfg.geo.seed + 100 + static_cast<std::uint64_t>(i);
    const oracle::ToyProblem toy = oracle::random_toy(seed);
    const oracle::ToyFiber fiber = oracle::make_toy_fiber(toy);

    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(toy.dim());
    std::mt19937_64 rng(seed ^ 0xABCDEFull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < toy.dim(); ++j) v[j] = gauss(rng);

    try {
      const oracle::BruteForceResult bf = oracle::brute_force_halfspace_max(fiber, v, grid);
      reduction::MaximizerOptions mopts;
      mopts.tol = 1e-10;
      mopts.seed = seed;
      const reduction::MaximizerResult mx =
          reduction::maximize_on_halfspace(fiber.fp, v, mopts);
      const double dist = reduction::detail::vnorm(*fiber.model, mx.g - bf.g);
      emit("toy_maximizer_agreement", "toy_" + std::to_string(i), dist, 10.0 * grid.step,
           mx.converged && dist <= 10.0 * grid.step);
    } catch (const std::exception& e) {
      out << "toy_maximizer_agreement,toy_" << i << ",error(" << e.what() << "),,FAIL\n";
      all_ok = false;
    }
  }

  // scalar ground-state closed form vs an independent 1-d maximization
  {
    const auto gs = oracle::scalar_ground_state_oracle(0.5, 1.0, 3.0);
    const double pi = std::numbers::pi;
    auto ray_energy = [&](double t) {
      return pi * 0.5 * t * t - 2.0 * pi * std::pow(t, 4.0) / 4.0;
    };
    const double t_num = oracle::golden_section_max(ray_energy, 0.0, 4.0);
    emit("scalar_ground_state_t", "t_star", std::abs(t_num - gs.t_star), 1e-8,
         std::abs(t_num - gs.t_star) <= 1e-8);
    emit("scalar_ground_state_e", "e_star", std::abs(ray_energy(t_num) - gs.e_star), 1e-10,
         std::abs(ray_energy(t_num) - gs.e_star) <= 1e-10);
    emit("scalar_ground_state_pi8", "e_star_vs_pi_over_8", std::abs(gs.e_star - pi / 8.0),
         1e-15, std::abs(gs.e_star - pi / 8.0) <= 1e-15);
  }

  // invariant suite on the analytic flat ground state
  {
    geodesic::GeodesicConfig gcfg;
    gcfg.k_max = 8;
    gcfg.tol = 1e-9;
    geodesic::GeodesicContext ctx(gcfg);
    geodesic::LoopMap phi(ctx.chart(), Eigen::VectorXi::Zero(1), gcfg.effective_m_phi());
    const auto& entry = ctx.entry(phi);
    // lambda = 1/2 mode with pointwise magnitude t_star = sqrt(1/2):
    // coefficient against the L^2-normalized mode is t_star * sqrt(2 pi)
    const auto gs = oracle::scalar_ground_state_oracle(0.5, 1.0, 3.0);
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(entry.model->dim);
    for (int i = 0; i < entry.model->dim; ++i)
      if (std::abs(entry.model->eigenvalues[i] - 0.5) < 1e-12) {
        a[i] = gs.t_star * std::sqrt(2.0 * std::numbers::pi);
        break;
      }
    auto fbar = [&ctx, &phi](const Eigen::VectorXcd& v) { return ctx.f_bar(phi, v); };
    const auto checks = oracle::invariant_suite(ctx.fiber(phi), a, 1e-8, fbar);
    for (const auto& c : checks)
      emit("flat_ground_state_invariant", c.name, c.value, c.threshold, c.pass);
  }

  return all_ok ? kExitOk : kExitVerifyFail;
}

}  // namespace nehari::cli
