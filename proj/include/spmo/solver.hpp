#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "spmo/coefficients.hpp"
#include "spmo/grid.hpp"
#include "spmo/stochastic.hpp"

namespace spmo {

enum class Backend { fd, galerkin };
enum class PenaltyMode { implicit_resolve, explicit_euler };

struct SolverConfig {
  Backend backend = Backend::fd;
  double dt = 0.0;  // ignored when dt_auto
  bool dt_auto = true;
  double cfl_safety = 0.5;        // in (0, 1]
  PenaltyMode penalty_mode = PenaltyMode::implicit_resolve;
  double epsilon = 0.1;
  int n_reg = 8;
  int galerkin_modes = 0;         // retained band per axis (|k| <= modes/2)
  double T = 0.1;
  int snapshot_every = 10;        // 1 keeps every step
};

struct Problem {
  GridSpec grid;
  PorousLaw porous;
  ForcingLaw forcing;
  NoiseLaw noise;
  Field xi;        // initial datum as supplied (harness mollifies upstream)
  double s0 = 1e9; // far-away barrier disables the constraint in practice
  double h_s = 0.0;
};

struct Diagnostics {
  double dt = 0.0;
  long steps = 0;
  double cfl_margin = 0.0;  // dt / (h^2 / (2 d sup Phi_n'))
  long obstacle_clamp_count = 0;
  double max_abs_u = 0.0;
  double min_u = 0.0;
  double max_overshoot = 0.0;  // max over Q_T of u - S
  bool failed = false;
  long fail_step = -1;
};

/// Time-ordered snapshots of one penalized run plus everything the
/// estimators need to re-assemble integrals: the penalty fields, the barrier
/// path at full resolution, and the driving noise.
struct Trajectory {
  GridSpec grid;
  double dt = 0.0;
  long steps = 0;
  int snapshot_every = 1;
  std::vector<long> snap_steps;
  std::vector<double> times;
  std::vector<Field> u;
  std::vector<Field> nu;
  ObstaclePath obstacle;
  std::shared_ptr<const NoisePath> noise;
  std::shared_ptr<const RegularizedLaw> reg;
  NoiseLaw noise_law;
  ForcingLaw forcing;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  Diagnostics diag;

  bool full_cadence() const { return snapshot_every == 1; }
  std::size_t snapshots() const { return u.size(); }
};

/// Pointwise backward-Euler resolvent of the penalty: the unique u* with
/// u* + (dt/eps)(u* - S)^+ = rhs.
double resolve_penalty_implicit(double rhs, double S, double dt, double eps);

/// Largest stable explicit step h^2 / (2 d sup Phi_n').
double cfl_dt(const GridSpec& grid, const RegularizedLaw& reg);

/// One explicit Euler-Maruyama step of the finite-difference backend.
/// dw is the increment row for this step; S_j the barrier value entering the
/// penalty. Exposed so the update formula can be checked in isolation.
Field step_fd(const Field& u, double t, double S_j, std::span<const double> dw,
              const RegularizedLaw& reg, const ForcingLaw& forcing,
              const NoiseLaw& noise, double dt, double eps, PenaltyMode mode);

/// Pseudo-spectral backend: state lives in the truncated Fourier band
/// (|k| <= modes/2 per axis), nonlinearities are evaluated on the full grid,
/// the Laplacian is the exact multiplier -(2 pi k)^2 per axis, and the
/// penalty is applied explicitly.
class GalerkinStepper {
 public:
  GalerkinStepper(const GridSpec& grid, int modes);
  ~GalerkinStepper();
  GalerkinStepper(const GalerkinStepper&) = delete;
  GalerkinStepper& operator=(const GalerkinStepper&) = delete;

  std::vector<std::complex<double>> project(const Field& f) const;
  Field to_physical(const std::vector<std::complex<double>>& modes) const;
  /// Truncation to the retained band (idempotent).
  void truncate(std::vector<std::complex<double>>& modes) const;
  void step(std::vector<std::complex<double>>& state, double t, double S_j,
            std::span<const double> dw, const RegularizedLaw& reg,
            const ForcingLaw& forcing, const NoiseLaw& noise, double dt,
            double eps) const;

  std::size_t coeff_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Integrate the penalized regularized equation over [0, T].
Trajectory run(const Problem& problem, const SolverConfig& cfg, std::uint64_t seed);

/// Per-snapshot absolute deficit of the weak-form identity against the test
/// field phi (centered differences; requires full cadence).
std::vector<double> weak_residual(const Trajectory& traj, const Field& phi);

/// Closed-form source-type solution of the deterministic porous medium
/// equation on the line, periodized by the minimum-image distance to
/// `center`. Valid while the support stays inside one period.
double barenblatt(double x, double center, double t, double m, double C);

}  // namespace spmo
