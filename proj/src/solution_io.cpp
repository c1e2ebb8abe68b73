#include "nehari/solution_io.hpp"

#include <chrono>
#include <complex>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace nehari::cli {

namespace {

int row_of_m(int m) { return m == 0 ? 0 : (m > 0 ? 2 * m - 1 : -2 * m); }

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double parse_num(const std::string& what, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw IoError("solution file: bad number in " + what + ": '" + v + "'");
  }
}

}  // namespace

void write_solution(const std::string& path, const RunConfig& cfg,
                    const geodesic::SolveReport& report) {
  std::ostringstream out;
  out << "# version = 1\n";
  out << "# format = dirac-geodesic-solution\n";
  {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    out << "# created = " << buf << "\n";
  }
  out << "# circle_length = " << format_double(2.0 * std::numbers::pi) << "\n";
  out << "# spin_structure = antiperiodic\n";
  for (const auto& [k, v] : config_echo(cfg)) out << "# " << k << " = " << v << "\n";
  out << "# converged = " << (report.converged ? "true" : "false") << "\n";

  const int rows = static_cast<int>(report.phi.coeffs.rows());
  const int n = static_cast<int>(report.phi.coeffs.cols());
  for (int c = 0; c < n; ++c)
    out << "WINDING, " << c << ", " << report.phi.winding[c] << "\n";
  const int m_phi = (rows - 1) / 2;
  for (int m = -m_phi; m <= m_phi; ++m)
    for (int c = 0; c < n; ++c)
      out << "PHI, " << m << ", " << c << ", "
          << format_double(report.phi.coeffs(row_of_m(m), c)) << "\n";

  const int k_max = report.k_max;
  for (int i = 0; i < 2 * k_max; ++i) {
    const int k_num = 2 * i - 2 * k_max + 1;  // odd: k = k_num / 2
    for (int c = 0; c < n; ++c) {
      const std::complex<double> z = report.psi_modes[i * n + c];
      out << "PSI, " << k_num << ", " << c << ", " << format_double(z.real()) << ", "
          << format_double(z.imag()) << "\n";
    }
  }
  out << "# energy = " << format_double(report.energies.total) << "\n";
  out << "# residual_phi = " << format_double(report.res_phi) << "\n";
  out << "# residual_psi = " << format_double(report.res_psi) << "\n";

  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << out.str();
  }
  fs::rename(tmp, target);
}

SolutionData read_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  SolutionData sol;
  std::map<std::string, std::string> header;
  struct PhiRow {
    int m, c;
    double v;
  };
  struct PsiRow {
    int k_num, c;
    double re, im;
  };
  std::vector<PhiRow> phis;
  std::vector<PsiRow> psis;
  std::vector<std::pair<int, long long>> windings;
  bool saw_energy = false, saw_rphi = false, saw_rpsi = false;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(t.substr(1, eq - 1));
      const std::string value = trim(t.substr(eq + 1));
      if (key == "energy") {
        sol.energy = parse_num("energy footer", value);
        saw_energy = true;
      } else if (key == "residual_phi") {
        sol.residual_phi = parse_num("residual_phi footer", value);
        saw_rphi = true;
      } else if (key == "residual_psi") {
        sol.residual_psi = parse_num("residual_psi footer", value);
        saw_rpsi = true;
      } else {
        header[key] = value;
      }
      continue;
    }
    const auto fields = split_commas(t);
    if (fields.empty()) continue;
    if (fields[0] == "PHI") {
      if (fields.size() != 4) throw IoError("solution file: malformed PHI row at line " +
                                            std::to_string(lineno));
      phis.push_back({static_cast<int>(parse_num("PHI mode", fields[1])),
                      static_cast<int>(parse_num("PHI component", fields[2])),
                      parse_num("PHI value", fields[3])});
    } else if (fields[0] == "WINDING") {
      if (fields.size() != 3)
        throw IoError("solution file: malformed WINDING row at line " + std::to_string(lineno));
      windings.emplace_back(static_cast<int>(parse_num("WINDING component", fields[1])),
                            static_cast<long long>(parse_num("WINDING value", fields[2])));
    } else if (fields[0] == "PSI") {
      if (fields.size() != 5)
        throw IoError("solution file: malformed PSI row at line " + std::to_string(lineno));
      psis.push_back({static_cast<int>(parse_num("PSI mode", fields[1])),
                      static_cast<int>(parse_num("PSI component", fields[2])),
                      parse_num("PSI re", fields[3]), parse_num("PSI im", fields[4])});
    } else {
      throw IoError("solution file: unknown record '" + fields[0] + "' at line " +
                    std::to_string(lineno));
    }
  }

  if (!saw_energy || !saw_rphi || !saw_rpsi)
    throw IoError("solution file: missing footer (energy/residual lines)");

  // rebuild the config from the header echo
  static const char* config_keys[] = {
      "chart", "n_fiber", "k_max", "m_phi", "n_grid", "clifford_sign", "p",
      "b_const", "b_cos", "b_sin", "winding", "multistart", "seed",
      "phi_init_scale", "tol", "tol_maximizer", "max_outer", "max_maximizer"};
  for (const char* key : config_keys) {
    const auto it = header.find(key);
    if (it == header.end())
      throw IoError(std::string("solution file: header missing '") + key + "'");
    apply_config_key(sol.config, key, it->second);
  }
  sol.converged = header.count("converged") && header["converged"] == "true";

  const auto& g = sol.config.geo;
  const int n = g.chart == "sphere" ? 2 : g.n_fiber;
  const int m_phi = g.effective_m_phi();
  const int k_max = g.k_max;

  sol.winding = Eigen::VectorXi::Zero(n);
  for (const auto& [c, w] : windings) {
    if (c < 0 || c >= n) throw IoError("solution file: WINDING component out of range");
    sol.winding[c] = static_cast<int>(w);
  }
  sol.phi_coeffs = Eigen::MatrixXd::Zero(2 * m_phi + 1, n);
  size_t phi_seen = 0;
  for (const auto& row : phis) {
    if (std::abs(row.m) > m_phi || row.c < 0 || row.c >= n)
      throw IoError("solution file: PHI row out of range (m = " + std::to_string(row.m) + ")");
    sol.phi_coeffs(row_of_m(row.m), row.c) = row.v;
    ++phi_seen;
  }
  if (phi_seen != static_cast<size_t>((2 * m_phi + 1) * n))
    throw IoError("solution file: expected " + std::to_string((2 * m_phi + 1) * n) +
                  " PHI rows, found " + std::to_string(phi_seen));

  sol.psi_modes = Eigen::VectorXcd::Zero(2 * k_max * n);
  size_t psi_seen = 0;
  for (const auto& row : psis) {
    if (row.k_num % 2 == 0) throw IoError("solution file: PSI k_numerator must be odd");
    const int i = (row.k_num + 2 * k_max - 1) / 2;
    if (i < 0 || i >= 2 * k_max || row.c < 0 || row.c >= n)
      throw IoError("solution file: PSI row out of range (k_numerator = " +
                    std::to_string(row.k_num) + ")");
    sol.psi_modes[i * n + row.c] = std::complex<double>(row.re, row.im);
    ++psi_seen;
  }
  if (psi_seen != static_cast<size_t>(2 * k_max * n))
    throw IoError("solution file: expected " + std::to_string(2 * k_max * n) +
                  " PSI rows, found " + std::to_string(psi_seen));

  return sol;
}

geodesic::LoopMap loop_from_solution(const SolutionData& sol,
                                     const geodesic::GeodesicContext& ctx) {
  geodesic::LoopMap phi(ctx.chart(), sol.winding, sol.config.geo.effective_m_phi());
  phi.coeffs = sol.phi_coeffs;
  return phi;
}

}  // namespace nehari::cli
