#include "spmo/solver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace spmo {

double resolve_penalty_implicit(double rhs, double S, double dt, double eps) {
  if (rhs <= S) return rhs;
  const double a = dt / eps;
  return (rhs + a * S) / (1.0 + a);
}

double cfl_dt(const GridSpec& grid, const RegularizedLaw& reg) {
  return grid.h * grid.h / (2.0 * grid.dim * reg.sup_phi_prime());
}

namespace {

thread_local std::vector<double> tl_phi, tl_out;

void fd_update(const std::vector<double>& u, std::vector<double>& out,
               const GridSpec& g, double t, double S_j, double omega,
               const RegularizedLaw& reg, const ForcingLaw& forcing,
               const NoiseLaw& noise, double dt, double eps, PenaltyMode mode) {
  const int n = g.n_axis;
  const double inv_h2 = 1.0 / (g.h * g.h);
  std::vector<double>& q = tl_phi;
  q.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) q[i] = reg.phi_n(u[i]);
  out.resize(u.size());

  auto finish = [&](std::size_t i, double lap) {
    const double ui = u[i];
    double rhs = ui + dt * (lap + forcing(t, node_coords(g, i), ui)) + noise.shape(ui) * omega;
    if (mode == PenaltyMode::implicit_resolve) {
      out[i] = resolve_penalty_implicit(rhs, S_j, dt, eps);
    } else {
      const double gpen = ui > S_j ? (ui - S_j) / eps : 0.0;
      out[i] = rhs - dt * gpen;
    }
  };

  if (g.dim == 1) {
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1 == n) ? 0 : i + 1;
      const int im = (i == 0) ? n - 1 : i - 1;
      finish(static_cast<std::size_t>(i), (q[ip] - 2.0 * q[i] + q[im]) * inv_h2);
    }
  } else {
    for (int ix = 0; ix < n; ++ix) {
      const int xp = (ix + 1 == n) ? 0 : ix + 1;
      const int xm = (ix == 0) ? n - 1 : ix - 1;
      for (int iy = 0; iy < n; ++iy) {
        const int yp = (iy + 1 == n) ? 0 : iy + 1;
        const int ym = (iy == 0) ? n - 1 : iy - 1;
        const std::size_t c = static_cast<std::size_t>(ix) * n + iy;
        const double lap = (q[static_cast<std::size_t>(xp) * n + iy] +
                            q[static_cast<std::size_t>(xm) * n + iy] +
                            q[static_cast<std::size_t>(ix) * n + yp] +
                            q[static_cast<std::size_t>(ix) * n + ym] - 4.0 * q[c]) *
                           inv_h2;
        finish(c, lap);
      }
    }
  }
}

}  // namespace

Field step_fd(const Field& u, double t, double S_j, std::span<const double> dw,
              const RegularizedLaw& reg, const ForcingLaw& forcing,
              const NoiseLaw& noise, double dt, double eps, PenaltyMode mode) {
  const double omega = noise.amp_weighted_sum(dw);
  Field out = Field::zeros(u.grid);
  fd_update(u.values, out.values, u.grid, t, S_j, omega, reg, forcing, noise, dt, eps, mode);
  return out;
}

// ---------------------------------------------------------------------------
// Galerkin backend
// ---------------------------------------------------------------------------

namespace {
std::mutex fftw_plan_mutex;  // FFTW plan creation is not thread-safe
}

struct GalerkinStepper::Impl {
  GridSpec grid;
  int modes;           // retained band per axis
  int n;               // evaluation grid points per axis
  std::size_t n_phys;  // n^d
  std::size_t n_cplx;  // r2c coefficient count
  double* phys = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<double> lambda;  // Laplacian multiplier (2 pi k)^2 summed over axes
  std::vector<bool> keep;      // retained-band mask

  Impl(const GridSpec& g, int m) : grid(g), modes(m), n(g.n_axis) {
    n_phys = g.size();
    n_cplx = (g.dim == 1) ? static_cast<std::size_t>(n / 2 + 1)
                          : static_cast<std::size_t>(n) * (n / 2 + 1);
    phys = fftw_alloc_real(n_phys);
    spec = fftw_alloc_complex(n_cplx);
    {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex);
      if (g.dim == 1) {
        fwd = fftw_plan_dft_r2c_1d(n, phys, spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(n, spec, phys, FFTW_ESTIMATE);
      } else {
        fwd = fftw_plan_dft_r2c_2d(n, n, phys, spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_2d(n, n, spec, phys, FFTW_ESTIMATE);
      }
    }
    lambda.resize(n_cplx);
    keep.resize(n_cplx);
    const double two_pi = 2.0 * M_PI;
    const int half_band = modes / 2;
    if (g.dim == 1) {
      for (int k = 0; k <= n / 2; ++k) {
        lambda[static_cast<std::size_t>(k)] = (two_pi * k) * (two_pi * k);
        keep[static_cast<std::size_t>(k)] = (k <= half_band);
      }
    } else {
      for (int kx = 0; kx < n; ++kx) {
        const int sx = kx <= n / 2 ? kx : kx - n;
        for (int ky = 0; ky <= n / 2; ++ky) {
          const std::size_t idx = static_cast<std::size_t>(kx) * (n / 2 + 1) + ky;
          lambda[idx] = (two_pi * sx) * (two_pi * sx) + (two_pi * ky) * (two_pi * ky);
          keep[idx] = (std::abs(sx) <= half_band && ky <= half_band);
        }
      }
    }
  }

  ~Impl() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    fftw_free(phys);
    fftw_free(spec);
  }

  void forward(const double* in, std::complex<double>* out) {
    std::copy(in, in + n_phys, phys);
    fftw_execute(fwd);
    const double scale = 1.0 / static_cast<double>(n_phys);
    for (std::size_t i = 0; i < n_cplx; ++i)
      out[i] = std::complex<double>(spec[i][0], spec[i][1]) * scale;
  }

  void backward(const std::complex<double>* in, double* out) {
    for (std::size_t i = 0; i < n_cplx; ++i) {
      spec[i][0] = in[i].real();
      spec[i][1] = in[i].imag();
    }
    fftw_execute(bwd);
    std::copy(phys, phys + n_phys, out);
  }
};

GalerkinStepper::GalerkinStepper(const GridSpec& grid, int modes) {
  if (modes < 2 || modes % 2 != 0)
    throw std::invalid_argument("GalerkinStepper: modes must be an even count >= 2");
  if (modes > grid.n_axis)
    throw std::invalid_argument("GalerkinStepper: modes exceed the evaluation grid");
  impl_ = std::make_unique<Impl>(grid, modes);
}

GalerkinStepper::~GalerkinStepper() = default;

std::size_t GalerkinStepper::coeff_count() const { return impl_->n_cplx; }

void GalerkinStepper::truncate(std::vector<std::complex<double>>& modes) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (!impl_->keep[i]) modes[i] = 0.0;
}

std::vector<std::complex<double>> GalerkinStepper::project(const Field& f) const {
  std::vector<std::complex<double>> out(impl_->n_cplx);
  impl_->forward(f.values.data(), out.data());
  truncate(out);
  return out;
}

Field GalerkinStepper::to_physical(const std::vector<std::complex<double>>& modes) const {
  Field f = Field::zeros(impl_->grid);
  impl_->backward(modes.data(), f.values.data());
  return f;
}

void GalerkinStepper::step(std::vector<std::complex<double>>& state, double t, double S_j,
                           std::span<const double> dw, const RegularizedLaw& reg,
                           const ForcingLaw& forcing, const NoiseLaw& noise, double dt,
                           double eps) const {
  Impl& im = *impl_;
  const double omega = noise.amp_weighted_sum(dw);
  std::vector<double> u(im.n_phys), v(im.n_phys);
  im.backward(state.data(), u.data());
  // v collects everything that enters pointwise: dt (F - G) + sigma-shape noise.
  for (std::size_t i = 0; i < im.n_phys; ++i) {
    const double ui = u[i];
    const double gpen = ui > S_j ? (ui - S_j) / eps : 0.0;
    v[i] = dt * (forcing(t, node_coords(im.grid, i), ui) - gpen) + noise.shape(ui) * omega;
    u[i] = reg.phi_n(ui);
  }
  std::vector<std::complex<double>> qhat(im.n_cplx), vhat(im.n_cplx);
  im.forward(u.data(), qhat.data());
  im.forward(v.data(), vhat.data());
  for (std::size_t i = 0; i < im.n_cplx; ++i) {
    if (!im.keep[i]) {
      state[i] = 0.0;
      continue;
    }
    state[i] += -dt * im.lambda[i] * qhat[i] + vhat[i];
  }
}

// ---------------------------------------------------------------------------
// Time integration
// ---------------------------------------------------------------------------

Trajectory run(const Problem& problem, const SolverConfig& cfg, std::uint64_t seed) {
  if (problem.xi.grid != problem.grid)
    throw std::invalid_argument("run: initial datum grid mismatch");
  if (!problem.xi.all_finite()) throw std::invalid_argument("run: initial datum not finite");
  if (!(cfg.T > 0.0)) throw std::invalid_argument("run: horizon T must be positive");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("run: epsilon must be positive");
  if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0))
    throw std::invalid_argument("run: cfl_safety must lie in (0,1]");
  if (problem.s0 < problem.xi.max())
    throw std::invalid_argument("run: barrier start S0 must dominate the initial datum");
  if (problem.h_s < 0.0) throw std::invalid_argument("run: h_S must be >= 0");
  if (problem.noise.amplitudes.empty())
    throw std::invalid_argument("run: noise law needs at least one mode");

  auto reg = std::make_shared<RegularizedLaw>(problem.porous, cfg.n_reg);
  const double bound = cfl_dt(problem.grid, *reg);

  double dt = cfg.dt_auto ? cfg.cfl_safety * bound : cfg.dt;
  if (!(dt > 0.0)) throw std::invalid_argument("run: time step must be positive");
  if (cfg.backend == Backend::fd && dt > cfg.cfl_safety * bound * (1.0 + 1e-12))
    throw std::invalid_argument("run: dt violates the CFL bound cfl_safety*h^2/(2d sup Phi_n')");
  // the galerkin backend always treats the penalty explicitly
  const bool explicit_penalty = cfg.penalty_mode == PenaltyMode::explicit_euler ||
                                cfg.backend == Backend::galerkin;
  if (explicit_penalty && dt > cfg.epsilon)
    throw std::invalid_argument("run: explicit penalty requires dt <= epsilon");

  const long steps = std::max<long>(1, static_cast<long>(std::ceil(cfg.T / dt - 1e-12)));
  dt = cfg.T / static_cast<double>(steps);

  const int k_modes = static_cast<int>(problem.noise.amplitudes.size());
  auto noise = std::make_shared<NoisePath>(
      sample_noise(seed, dt, static_cast<int>(steps), k_modes));
  ObstaclePath obstacle = integrate_obstacle(problem.s0, problem.h_s, *noise, problem.noise);

  Trajectory traj;
  traj.grid = problem.grid;
  traj.dt = dt;
  traj.steps = steps;
  traj.snapshot_every = std::max(1, cfg.snapshot_every);
  traj.obstacle = std::move(obstacle);
  traj.noise = noise;
  traj.reg = reg;
  traj.noise_law = problem.noise;
  traj.forcing = problem.forcing;
  traj.epsilon = cfg.epsilon;
  traj.seed = seed;
  traj.diag.dt = dt;
  traj.diag.steps = steps;
  traj.diag.cfl_margin = dt / bound;
  traj.diag.obstacle_clamp_count = traj.obstacle.clamp_count;

  auto snapshot = [&](long j, const Field& u_now) {
    const double S_j = traj.obstacle.values[static_cast<std::size_t>(j)];
    traj.snap_steps.push_back(j);
    traj.times.push_back(static_cast<double>(j) * dt);
    traj.u.push_back(u_now);
    Field nu = Field::zeros(problem.grid);
    for (std::size_t i = 0; i < u_now.size(); ++i) {
      const double d = u_now.values[i] - S_j;
      nu.values[i] = d > 0.0 ? d / cfg.epsilon : 0.0;
    }
    traj.nu.push_back(std::move(nu));
  };

  auto track = [&](const Field& u_now, long j) -> bool {
    double mx = 0.0, mn = u_now.values[0], over = -std::numeric_limits<double>::infinity();
    const double S_j = traj.obstacle.values[static_cast<std::size_t>(j)];
    for (double v : u_now.values) {
      mx = std::max(mx, std::abs(v));
      mn = std::min(mn, v);
      over = std::max(over, v - S_j);
    }
    traj.diag.max_abs_u = std::max(traj.diag.max_abs_u, mx);
    traj.diag.min_u = std::min(traj.diag.min_u, mn);
    traj.diag.max_overshoot = std::max(traj.diag.max_overshoot, over);
    if (!std::isfinite(mx)) {
      traj.diag.failed = true;
      traj.diag.fail_step = j;
      return false;
    }
    return true;
  };

  if (cfg.backend == Backend::fd) {
    Field u = problem.xi;
    traj.diag.min_u = u.min();
    track(u, 0);
    snapshot(0, u);
    Field next = Field::zeros(problem.grid);
    for (long j = 0; j < steps; ++j) {
      const double t = static_cast<double>(j) * dt;
      const double S_j = traj.obstacle.values[static_cast<std::size_t>(j)];
      const double omega = problem.noise.amp_weighted_sum(noise->at(static_cast<int>(j)));
      fd_update(u.values, next.values, problem.grid, t, S_j, omega, *reg, problem.forcing,
                problem.noise, dt, cfg.epsilon, cfg.penalty_mode);
      u.values.swap(next.values);
      if (!track(u, j + 1)) {
        snapshot(j + 1, u);
        return traj;
      }
      if ((j + 1) % traj.snapshot_every == 0 || j + 1 == steps) snapshot(j + 1, u);
    }
    return traj;
  }

  // Galerkin; default band = half the evaluation grid (dealiasing by padding)
  const int modes = cfg.galerkin_modes > 0 ? cfg.galerkin_modes : problem.grid.n_axis / 2;
  GalerkinStepper stepper(problem.grid, modes);
  auto state = stepper.project(problem.xi);
  Field u = stepper.to_physical(state);
  traj.diag.min_u = u.min();
  track(u, 0);
  snapshot(0, u);
  for (long j = 0; j < steps; ++j) {
    const double t = static_cast<double>(j) * dt;
    const double S_j = traj.obstacle.values[static_cast<std::size_t>(j)];
    stepper.step(state, t, S_j, noise->at(static_cast<int>(j)), *reg, problem.forcing,
                 problem.noise, dt, cfg.epsilon);
    const bool want_snap = ((j + 1) % traj.snapshot_every == 0 || j + 1 == steps);
    u = stepper.to_physical(state);
    if (!track(u, j + 1)) {
      snapshot(j + 1, u);
      return traj;
    }
    if (want_snap) snapshot(j + 1, u);
  }
  return traj;
}

// ---------------------------------------------------------------------------

std::vector<double> weak_residual(const Trajectory& traj, const Field& phi) {
  if (!traj.full_cadence())
    throw std::invalid_argument("weak_residual: trajectory must be stored at full cadence");
  if (phi.grid != traj.grid) throw std::invalid_argument("weak_residual: grid mismatch");
  const GridSpec& g = traj.grid;
  double hd = g.h;
  if (g.dim == 2) hd *= g.h;

  std::vector<Field> grad_phi;
  for (int a = 0; a < g.dim; ++a) grad_phi.push_back(centered_diff(phi, a));

  const double xi_phi = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) acc += traj.u[0].values[i] * phi.values[i];
    return acc * hd;
  }();

  std::vector<double> out(traj.snapshots(), 0.0);
  double drift_acc = 0.0;   // int_0^t [ <grad Phi_n(u), grad phi> - <F - nu, phi> ]
  double noise_acc = 0.0;   // sum_k int_0^t <sigma^k(u) phi> dW^k
  for (std::size_t s = 0; s < traj.snapshots(); ++s) {
    if (s > 0) {
      const long j = traj.snap_steps[s - 1];
      const Field& uj = traj.u[s - 1];
      const double t = traj.times[s - 1];
      const double S_j = traj.obstacle.values[static_cast<std::size_t>(j)];

      Field q = Field::zeros(g);
      for (std::size_t i = 0; i < q.size(); ++i) q.values[i] = traj.reg->phi_n(uj.values[i]);
      double grad_term = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        Field gq = centered_diff(q, a);
        for (std::size_t i = 0; i < gq.size(); ++i)
          grad_term += gq.values[i] * grad_phi[static_cast<std::size_t>(a)].values[i];
      }
      grad_term *= hd;

      double fg_term = 0.0;
      double sig_term = 0.0;
      for (std::size_t i = 0; i < uj.size(); ++i) {
        const double ui = uj.values[i];
        const double gpen = ui > S_j ? (ui - S_j) / traj.epsilon : 0.0;
        fg_term += (traj.forcing(t, node_coords(g, i), ui) - gpen) * phi.values[i];
        sig_term += traj.noise_law.shape(ui) * phi.values[i];
      }
      fg_term *= hd;
      sig_term *= hd;
      const double omega =
          traj.noise_law.amp_weighted_sum(traj.noise->at(static_cast<int>(j)));
      drift_acc += traj.dt * (grad_term - fg_term);
      noise_acc += sig_term * omega;
    }
    double ut_phi = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) ut_phi += traj.u[s].values[i] * phi.values[i];
    ut_phi *= hd;
    out[s] = std::abs(ut_phi - xi_phi + drift_acc - noise_acc);
  }
  return out;
}

double barenblatt(double x, double center, double t, double m, double C) {
  const double alpha = 1.0 / (m + 1.0);          // d = 1
  const double beta = alpha;
  const double k = alpha * (m - 1.0) / (2.0 * m);
  double d = std::abs(x - center);
  d = std::min(d, 1.0 - d);  // minimum-image distance on the unit torus
  const double xi = d * std::pow(t, -beta);
  const double core = C - k * xi * xi;
  if (core <= 0.0) return 0.0;
  return std::pow(t, -alpha) * std::pow(core, 1.0 / (m - 1.0));
}

}  // namespace spmo
