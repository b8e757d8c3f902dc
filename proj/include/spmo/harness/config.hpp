#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spmo/solver.hpp"

namespace spmo::harness {

/// Parsed experiment description: the problem block, the discretization
/// block, the penalty sweep block, the Monte Carlo block and output options.
/// Parsing is strict: unknown sections or keys are errors.
struct ExperimentConfig {
  // [problem]
  double m = 2.0;
  double K = 1.0;
  double N0 = 0.5;
  double kappa = 0.25;
  ForcingLaw::Kind forcing_kind = ForcingLaw::Kind::linear;
  NoiseLaw::Kind sigma_kind = NoiseLaw::Kind::linear;
  double sigma_amplitude = 0.0;
  int k_modes = 8;
  std::string xi_kind = "constant";  // constant | bump | barenblatt
  double xi_amplitude = 0.5;
  double xi_center = 0.5;
  double xi_width = 0.4;
  double xi_c = 0.1;
  double xi_t0 = 0.01;
  bool xi_mollify = true;
  bool obstacle = true;
  double s0 = 1.0;
  double h_s = 0.0;
  double T = 0.1;

  // [discretization]
  int d = 1;
  int n_axis = 64;
  bool dt_auto = true;
  double dt = 0.0;
  double cfl_safety = 0.5;
  Backend backend = Backend::fd;
  int galerkin_modes = 0;
  PenaltyMode penalty_mode = PenaltyMode::implicit_resolve;
  int snapshot_every = 10;

  // [penalty]
  std::vector<double> epsilon_list = {0.1};
  std::vector<int> n_reg_list = {8};

  // [monte_carlo]
  int paths = 1;
  std::uint64_t base_seed = 1;
  bool couple_noise = true;
  double estimate_p = 2.0;

  // [output]
  std::string directory = "out";
  bool write_snapshots = false;

  std::vector<std::string> warnings;  // filled during validation

  GridSpec grid() const { return GridSpec::make(d, n_axis); }
  double effective_s0() const { return obstacle ? s0 : 1e12; }

  Field build_xi() const;
  /// mollified (or merely clamped) initial datum for level n.
  Field prepared_xi(int n_reg) const;
  Problem build_problem(int n_reg) const;
  SolverConfig build_solver_config(double epsilon, int n_reg) const;

  /// Hash over every semantically meaningful field (output options excluded).
  std::uint64_t semantic_hash() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Assumption-level checks (xi >= 0, S0 >= sup xi, h_S >= 0, ...); throws on
/// violation, appends advisory warnings to cfg.warnings.
void validate(ExperimentConfig& cfg);

}  // namespace spmo::harness
