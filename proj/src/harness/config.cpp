#include "spmo/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace spmo::harness {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: trailing characters in value of '" + key + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (std::abs(x - std::round(x)) > 1e-9)
    throw std::invalid_argument("config: key '" + key + "' expects an integer");
  return static_cast<int>(std::llround(x));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: key '" + key + "' expects on/off");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  static const std::set<std::string> sections = {"problem", "discretization", "penalty",
                                                 "monte_carlo", "output"};
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section))
        throw std::invalid_argument("config: unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config: key '" + key + "' appears before any section");

    auto unknown = [&]() -> std::invalid_argument {
      return std::invalid_argument("config: unknown key '" + key + "' in section [" + section +
                                   "]");
    };

    if (section == "problem") {
      if (key == "m") cfg.m = to_double(key, val);
      else if (key == "K") cfg.K = to_double(key, val);
      else if (key == "N0") cfg.N0 = to_double(key, val);
      else if (key == "kappa") cfg.kappa = to_double(key, val);
      else if (key == "forcing") {
        if (val == "linear") cfg.forcing_kind = ForcingLaw::Kind::linear;
        else if (val == "linear_plus_spatial")
          cfg.forcing_kind = ForcingLaw::Kind::linear_plus_spatial;
        else throw std::invalid_argument("config: forcing must be linear|linear_plus_spatial");
      } else if (key == "sigma") {
        if (val == "linear") cfg.sigma_kind = NoiseLaw::Kind::linear;
        else if (val == "holder") cfg.sigma_kind = NoiseLaw::Kind::holder;
        else if (val == "off") {
          cfg.sigma_kind = NoiseLaw::Kind::linear;
          cfg.sigma_amplitude = 0.0;
        } else throw std::invalid_argument("config: sigma must be linear|holder|off");
      } else if (key == "sigma_amplitude") cfg.sigma_amplitude = to_double(key, val);
      else if (key == "k_modes") cfg.k_modes = to_int(key, val);
      else if (key == "xi") {
        if (val != "constant" && val != "bump" && val != "barenblatt")
          throw std::invalid_argument("config: xi must be constant|bump|barenblatt");
        cfg.xi_kind = val;
      } else if (key == "xi_amplitude") cfg.xi_amplitude = to_double(key, val);
      else if (key == "xi_center") cfg.xi_center = to_double(key, val);
      else if (key == "xi_width") cfg.xi_width = to_double(key, val);
      else if (key == "xi_c") cfg.xi_c = to_double(key, val);
      else if (key == "xi_t0") cfg.xi_t0 = to_double(key, val);
      else if (key == "xi_mollify") cfg.xi_mollify = to_bool(key, val);
      else if (key == "obstacle") cfg.obstacle = to_bool(key, val);
      else if (key == "s0") cfg.s0 = to_double(key, val);
      else if (key == "h_s") cfg.h_s = to_double(key, val);
      else if (key == "T") cfg.T = to_double(key, val);
      else throw unknown();
    } else if (section == "discretization") {
      if (key == "d") cfg.d = to_int(key, val);
      else if (key == "n_axis") cfg.n_axis = to_int(key, val);
      else if (key == "dt") {
        if (val == "auto") cfg.dt_auto = true;
        else {
          cfg.dt_auto = false;
          cfg.dt = to_double(key, val);
        }
      } else if (key == "cfl_safety") cfg.cfl_safety = to_double(key, val);
      else if (key == "backend") {
        if (val == "fd") cfg.backend = Backend::fd;
        else if (val == "galerkin") cfg.backend = Backend::galerkin;
        else throw std::invalid_argument("config: backend must be fd|galerkin");
      } else if (key == "galerkin_modes") cfg.galerkin_modes = to_int(key, val);
      else if (key == "penalty_mode") {
        if (val == "implicit") cfg.penalty_mode = PenaltyMode::implicit_resolve;
        else if (val == "explicit") cfg.penalty_mode = PenaltyMode::explicit_euler;
        else throw std::invalid_argument("config: penalty_mode must be implicit|explicit");
      } else if (key == "snapshot_every") cfg.snapshot_every = to_int(key, val);
      else throw unknown();
    } else if (section == "penalty") {
      if (key == "epsilon") {
        cfg.epsilon_list.clear();
        for (const auto& s : split_list(val)) cfg.epsilon_list.push_back(to_double(key, s));
      } else if (key == "n_reg") {
        cfg.n_reg_list.clear();
        for (const auto& s : split_list(val)) cfg.n_reg_list.push_back(to_int(key, s));
      } else throw unknown();
    } else if (section == "monte_carlo") {
      if (key == "paths") cfg.paths = to_int(key, val);
      else if (key == "base_seed") cfg.base_seed = static_cast<std::uint64_t>(
          std::stoull(val));
      else if (key == "couple_noise") cfg.couple_noise = to_bool(key, val);
      else if (key == "estimate_p") cfg.estimate_p = to_double(key, val);
      else throw unknown();
    } else {  // output
      if (key == "directory") cfg.directory = val;
      else if (key == "write_snapshots") cfg.write_snapshots = to_bool(key, val);
      else throw unknown();
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

Field ExperimentConfig::build_xi() const {
  const GridSpec g = grid();
  if (xi_kind == "constant") return Field::constant(g, xi_amplitude);
  if (xi_kind == "bump") {
    const double peak = bump::rho(0.5);
    return Field::sample(g, [&](std::array<double, 2> x) {
      double v = xi_amplitude;
      for (int a = 0; a < g.dim; ++a) {
        double dx = x[static_cast<std::size_t>(a)] - xi_center;
        dx -= std::round(dx);  // minimum image, in [-1/2, 1/2)
        v *= bump::rho(dx / xi_width + 0.5) / peak;
      }
      return v;
    });
  }
  // barenblatt (d = 1)
  return Field::sample(g, [&](std::array<double, 2> x) {
    return barenblatt(x[0], xi_center, xi_t0, m, xi_c);
  });
}

Field ExperimentConfig::prepared_xi(int n_reg) const {
  Field xi = build_xi();
  if (!xi_mollify) {
    const double bound = static_cast<double>(n_reg);
    for (double& v : xi.values) v = std::clamp(v, -bound, bound);
    return xi;
  }
  return mollified_initial(xi, n_reg);
}

Problem ExperimentConfig::build_problem(int n_reg) const {
  Problem p;
  p.grid = grid();
  p.porous = PorousLaw::make(m, K);
  p.forcing = ForcingLaw{forcing_kind, N0, K, kappa};
  p.noise = NoiseLaw{sigma_kind, NoiseLaw::default_amplitudes(sigma_amplitude, k_modes), K,
                     kappa};
  p.xi = prepared_xi(n_reg);
  p.s0 = effective_s0();
  p.h_s = h_s;
  return p;
}

SolverConfig ExperimentConfig::build_solver_config(double epsilon, int n_reg) const {
  SolverConfig sc;
  sc.backend = backend;
  sc.dt = dt;
  sc.dt_auto = dt_auto;
  sc.cfl_safety = cfl_safety;
  sc.penalty_mode = penalty_mode;
  sc.epsilon = epsilon;
  sc.n_reg = n_reg;
  // default band: half the evaluation grid per axis (dealiasing by padding)
  sc.galerkin_modes = galerkin_modes > 0 ? galerkin_modes : n_axis / 2;
  sc.T = T;
  sc.snapshot_every = snapshot_every;
  return sc;
}

std::uint64_t ExperimentConfig::semantic_hash() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << m << ';' << K << ';' << N0 << ';' << kappa << ';' << static_cast<int>(forcing_kind)
     << ';' << static_cast<int>(sigma_kind) << ';' << sigma_amplitude << ';' << k_modes << ';'
     << xi_kind << ';' << xi_amplitude << ';' << xi_center << ';' << xi_width << ';' << xi_c
     << ';' << xi_t0 << ';' << xi_mollify << ';' << obstacle << ';' << s0 << ';' << h_s << ';'
     << T << ';' << d << ';' << n_axis << ';' << dt_auto << ';' << dt << ';' << cfl_safety
     << ';' << static_cast<int>(backend) << ';' << galerkin_modes << ';'
     << static_cast<int>(penalty_mode) << ';' << snapshot_every << ';';
  for (double e : epsilon_list) ss << e << ',';
  ss << ';';
  for (int n : n_reg_list) ss << n << ',';
  ss << ';' << paths << ';' << base_seed << ';' << couple_noise << ';' << estimate_p;
  const std::string s = ss.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void validate(ExperimentConfig& cfg) {
  if (!(cfg.m > 1.0)) throw std::invalid_argument("config: m must exceed 1");
  if (!(cfg.K >= 1.0)) throw std::invalid_argument("config: K must be >= 1");
  if (cfg.N0 < 0.0) throw std::invalid_argument("config: N0 must be >= 0");
  if (!(cfg.kappa > 0.0 && cfg.kappa <= 0.5))
    throw std::invalid_argument("config: kappa must lie in (0, 1/2]");
  if (cfg.k_modes < 1) throw std::invalid_argument("config: k_modes must be >= 1");
  if (cfg.d != 1 && cfg.d != 2) throw std::invalid_argument("config: d must be 1 or 2");
  if (cfg.n_axis < 2) throw std::invalid_argument("config: n_axis must be >= 2");
  if (cfg.xi_kind == "barenblatt" && cfg.d != 1)
    throw std::invalid_argument("config: barenblatt initial data requires d = 1");
  if (cfg.xi_kind == "barenblatt" && !(cfg.xi_t0 > 0.0))
    throw std::invalid_argument("config: xi_t0 must be positive");
  if (!(cfg.T > 0.0)) throw std::invalid_argument("config: T must be positive");
  if (cfg.epsilon_list.empty()) throw std::invalid_argument("config: epsilon list is empty");
  for (double e : cfg.epsilon_list)
    if (!(e > 0.0)) throw std::invalid_argument("config: epsilon values must be positive");
  if (cfg.n_reg_list.empty()) throw std::invalid_argument("config: n_reg list is empty");
  for (int n : cfg.n_reg_list)
    if (n < 1) throw std::invalid_argument("config: n_reg values must be >= 1");
  if (cfg.paths < 1) throw std::invalid_argument("config: paths must be >= 1");
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0))
    throw std::invalid_argument("config: cfl_safety must lie in (0, 1]");
  if (!cfg.dt_auto && !(cfg.dt > 0.0))
    throw std::invalid_argument("config: explicit dt must be positive");
  if (cfg.estimate_p < 2.0) throw std::invalid_argument("config: estimate_p must be >= 2");
  if (cfg.snapshot_every < 1)
    throw std::invalid_argument("config: snapshot_every must be >= 1");
  if (cfg.h_s < 0.0) throw std::invalid_argument("config: h_s must be >= 0");

  const Field xi = cfg.build_xi();
  if (xi.min() < 0.0)
    throw std::invalid_argument("config: initial datum must be non-negative");
  if (cfg.obstacle && cfg.s0 < xi.max())
    throw std::invalid_argument("config: s0 must dominate the initial datum");
  if (cfg.obstacle && cfg.h_s == 0.0 && cfg.sigma_amplitude != 0.0 && cfg.s0 > 0.0) {
    NoiseLaw law{cfg.sigma_kind, NoiseLaw::default_amplitudes(cfg.sigma_amplitude, cfg.k_modes),
                 cfg.K, cfg.kappa};
    if (law.shape(cfg.s0) != 0.0)
      cfg.warnings.push_back(
          "sigma does not vanish at S0: the barrier follows its own stochastic path "
          "rather than staying constant");
  }
  if (cfg.backend == Backend::galerkin) {
    const int gm = cfg.galerkin_modes > 0 ? cfg.galerkin_modes : cfg.n_axis / 2;
    if (gm > cfg.n_axis)
      throw std::invalid_argument("config: galerkin_modes must not exceed n_axis");
    if (gm < 2 || gm % 2 != 0)
      throw std::invalid_argument("config: galerkin_modes must be an even count >= 2");
  }
}

}  // namespace spmo::harness
