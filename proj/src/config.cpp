#include "nehari/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nehari::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for key '" + key + "': " + v);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for key '" + key + "': " + v);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_winding(const Eigen::VectorXi& w) {
  std::string out;
  for (int i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(w[i]);
  }
  return out.empty() ? "0" : out;
}

Eigen::VectorXi parse_winding(const std::string& text) {
  const auto parts = split(text, ',');
  Eigen::VectorXi w(static_cast<int>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i)
    w[static_cast<int>(i)] = static_cast<int>(to_int("winding", parts[i]));
  return w;
}

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& g = cfg.geo;
  if (key == "chart") {
    if (value != "flat_torus" && value != "sphere")
      throw ConfigError("config: unknown chart '" + value + "'");
    g.chart = value;
  } else if (key == "n_fiber") {
    g.n_fiber = static_cast<int>(to_int(key, value));
  } else if (key == "k_max") {
    g.k_max = static_cast<int>(to_int(key, value));
  } else if (key == "m_phi") {
    g.m_phi = static_cast<int>(to_int(key, value));
  } else if (key == "n_grid") {
    g.n_grid = static_cast<int>(to_int(key, value));
  } else if (key == "clifford_sign") {
    g.clifford_sign = static_cast<int>(to_int(key, value));
  } else if (key == "p") {
    g.p = to_double(key, value);
  } else if (key == "b_const") {
    g.b_const = to_double(key, value);
  } else if (key == "b_cos") {
    g.b_cos = to_double(key, value);
  } else if (key == "b_sin") {
    g.b_sin = to_double(key, value);
  } else if (key == "winding") {
    g.winding = parse_winding(value);
  } else if (key == "multistart") {
    g.multistart = static_cast<int>(to_int(key, value));
  } else if (key == "seed") {
    g.seed = static_cast<std::uint64_t>(to_int(key, value));
  } else if (key == "phi_init_scale") {
    g.phi_init_scale = to_double(key, value);
  } else if (key == "tol") {
    g.tol = to_double(key, value);
  } else if (key == "tol_maximizer") {
    g.tol_maximizer = to_double(key, value);
  } else if (key == "max_outer") {
    g.max_outer = static_cast<int>(to_int(key, value));
  } else if (key == "max_maximizer") {
    g.max_maximizer = static_cast<int>(to_int(key, value));
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "log") {
    if (value != "quiet" && value != "info" && value != "debug")
      throw ConfigError("config: bad log level '" + value + "'");
    cfg.log = value;
  } else if (key == "sweep_axis") {
    if (value != "winding" && value != "p" && value != "k_max")
      throw ConfigError("config: bad sweep_axis '" + value + "'");
    cfg.sweep_axis = value;
  } else if (key == "sweep_values") {
    cfg.sweep_values = split(value, ',');
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_config_key(cfg, key, value);
  }
  // basic sanity beyond what the domain types check
  if (cfg.geo.k_max < 1) throw ConfigError("config: k_max must be >= 1");
  if (cfg.geo.chart == "sphere") cfg.geo.n_fiber = 2;
  if (cfg.geo.winding.size() &&
      cfg.geo.winding.size() != cfg.geo.n_fiber)
    throw ConfigError("config: winding length must equal n_fiber");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& cfg) {
  const auto& g = cfg.geo;
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("chart", g.chart);
  kv.emplace_back("n_fiber", std::to_string(g.chart == "sphere" ? 2 : g.n_fiber));
  kv.emplace_back("k_max", std::to_string(g.k_max));
  kv.emplace_back("m_phi", std::to_string(g.effective_m_phi()));
  kv.emplace_back("n_grid", std::to_string(g.effective_n_grid()));
  kv.emplace_back("clifford_sign", std::to_string(g.clifford_sign));
  kv.emplace_back("p", format_double(g.p));
  kv.emplace_back("b_const", format_double(g.b_const));
  kv.emplace_back("b_cos", format_double(g.b_cos));
  kv.emplace_back("b_sin", format_double(g.b_sin));
  kv.emplace_back("winding", format_winding(g.winding));
  kv.emplace_back("multistart", std::to_string(g.multistart));
  kv.emplace_back("seed", std::to_string(g.seed));
  kv.emplace_back("phi_init_scale", format_double(g.phi_init_scale));
  kv.emplace_back("tol", format_double(g.tol));
  kv.emplace_back("tol_maximizer", format_double(g.tol_maximizer));
  kv.emplace_back("max_outer", std::to_string(g.max_outer));
  kv.emplace_back("max_maximizer", std::to_string(g.max_maximizer));
  return kv;
}

}  // namespace nehari::cli
