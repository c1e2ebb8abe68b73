// Text solution-file format:
//   # key = value                 header (version, conventions, config echo)
//   PHI, m, component, value      real trig coefficient; m >= 0 cos, m < 0 sin
//   WINDING, component, integer
//   PSI, k_numerator, component, re, im    half-integer mode k = k_numerator/2
//   # energy = ...
//   # residual_phi = ...
//   # residual_psi = ...
// Floats print with 17 significant digits so a load/re-save round-trips
// bit-exactly; files are written atomically (temp + rename).

#pragma once

#include "nehari/config.hpp"
#include "nehari/geodesic.hpp"

#include <map>
#include <string>
#include <vector>

namespace nehari::cli {

struct SolutionData {
  RunConfig config;          // reconstructed from the header echo
  bool converged = false;
  Eigen::VectorXi winding;
  Eigen::MatrixXd phi_coeffs;    // (2 m_phi + 1) x n_fiber
  Eigen::VectorXcd psi_modes;    // flattened (mode, fiber)
  double energy = 0.0;           // footer values as stored
  double residual_phi = 0.0;
  double residual_psi = 0.0;
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

void write_solution(const std::string& path, const RunConfig& cfg,
                    const geodesic::SolveReport& report);

SolutionData read_solution(const std::string& path);

// Rebuild the loop map described by a solution file.
geodesic::LoopMap loop_from_solution(const SolutionData& sol,
                                     const geodesic::GeodesicContext& ctx);

}  // namespace nehari::cli
