#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "oamsim/condensate/trap.hpp"
#include "oamsim/core/error.hpp"
#include "oamsim/core/fft.hpp"
#include "oamsim/core/ladder_state.hpp"
#include "oamsim/dynamics/ladder.hpp"
#include "oamsim/optics/coupling.hpp"

namespace oamsim::dynamics {

/// One square Raman pulse.  delta_nu in multiples of nu_r, duration internal.
struct PulseSpec {
  optics::CouplingMap coupling;
  double delta_nu = 0.0;
  double duration = 0.0;
  bool trap_on = true;
};

struct EvolveOptions {
  double dt = 0.0;               // 0 picks dt from max_phase_step
  double max_phase_step = 0.1;   // rad per step for the split terms and the peak Rabi rate
  double edge_guard = 1e-3;      // <= 0 disables the truncation guard
  double norm_tolerance = 1e-9;
};

namespace detail {

/// Fastest phase rate of the split (non-exact) terms plus the peak coupling.
inline double fastest_rate(const LadderState& state, const PulseSpec& pulse,
                           const condensate::TrapSpec& trap, double g2d) {
  const auto& grid = state.grid();
  const double qn = grid.q_nyquist();
  double rate = 2.0 * qn * qn;
  double diag = 0.0;
  if (pulse.trap_on) {
    for (double v : trap.sample(grid)) diag = std::max(diag, v);
  }
  double rho_max = 0.0;
  for (double r : state.total_density()) rho_max = std::max(rho_max, r);
  diag += std::abs(g2d) * rho_max;
  rate = std::max({rate, diag, pulse.coupling.peak_rate});
  return rate;
}

/// Per-point propagators exp(-i H dt) of the local ladder Hamiltonian
///   H_nn = Delta_n,  H_{n,n-1} = omega/2,  H_{n-1,n} = conj(omega)/2.
/// With omega = |omega| e^{i chi}, H = G H_r G^dagger for G = diag(e^{i n chi}) and
/// real tridiagonal H_r, so U_nm = e^{i (n - m) chi} (V e^{-i lambda dt} V^T)_nm.
inline std::vector<Complex> ladder_propagators(const optics::CouplingMap& coupling,
                                               const std::vector<double>& detunings, double dt) {
  const auto d = static_cast<Eigen::Index>(detunings.size());
  const auto omega = coupling.omega.values();
  std::vector<Complex> props(omega.size() * static_cast<std::size_t>(d * d));
  Eigen::VectorXd diag(d);
  for (Eigen::Index n = 0; n < d; ++n) diag[n] = detunings[static_cast<std::size_t>(n)];
  Eigen::VectorXd sub(std::max<Eigen::Index>(d - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(d);
  Eigen::MatrixXcd ur(d, d);
  std::vector<Complex> rotor(static_cast<std::size_t>(2 * d - 1));

  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double mag = std::abs(omega[i]);
    const double chi = mag > 0.0 ? std::arg(omega[i]) : 0.0;
    Complex* u = props.data() + i * static_cast<std::size_t>(d * d);
    if (d == 1) {
      u[0] = std::polar(1.0, -diag[0] * dt);
      continue;
    }
    sub.setConstant(0.5 * mag);
    solver.computeFromTridiagonal(diag, sub.head(d - 1), Eigen::ComputeEigenvectors);
    const auto& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    Eigen::VectorXcd phases(d);
    for (Eigen::Index k = 0; k < d; ++k) phases[k] = std::polar(1.0, -vals[k] * dt);
    ur.noalias() = vecs.cast<Complex>() * phases.asDiagonal() * vecs.transpose().cast<Complex>();
    // rotor[k + d - 1] = e^{i k chi}, k = n - m
    for (Eigen::Index k = -(d - 1); k <= d - 1; ++k) {
      rotor[static_cast<std::size_t>(k + d - 1)] = std::polar(1.0, static_cast<double>(k) * chi);
    }
    for (Eigen::Index n = 0; n < d; ++n) {
      for (Eigen::Index m = 0; m < d; ++m) {
        u[n * d + m] = rotor[static_cast<std::size_t>(n - m + d - 1)] * ur(n, m);
      }
    }
  }
  return props;
}

inline std::vector<Complex> kinetic_phases(const Grid2D& grid, double dt) {
  std::vector<Complex> k(grid.size());
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double q2 = grid.q_y(iy) * grid.q_y(iy) + grid.q_z(iz) * grid.q_z(iz);
      k[grid.index(iy, iz)] = std::polar(1.0, -q2 * dt);
    }
  }
  return k;
}

inline void apply_kinetic(LadderState& state, const std::vector<Complex>& phases) {
  for (auto& c : state.components()) {
    auto data = c.values();
    transform_inplace(data, state.grid(), Direction::Forward);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= phases[i];
    transform_inplace(data, state.grid(), Direction::Inverse);
  }
}

/// Local step: exp(-i (V + g rho) dt) times the ladder propagator.  The scalar
/// diagonal term commutes with the ladder matrix and both preserve the local density.
inline void apply_local(LadderState& state, const std::vector<Complex>& props,
                        const std::vector<double>& potential, double g2d, double dt) {
  auto& comps = state.components();
  const std::size_t d = comps.size();
  const std::size_t npts = state.grid().size();
  std::vector<Complex*> ptr(d);
  for (std::size_t n = 0; n < d; ++n) ptr[n] = comps[n].values().data();
  std::vector<Complex> in(d);
  std::vector<Complex> out(d);
  for (std::size_t i = 0; i < npts; ++i) {
    double rho = 0.0;
    for (std::size_t n = 0; n < d; ++n) {
      in[n] = ptr[n][i];
      rho += std::norm(in[n]);
    }
    const double v = (potential.empty() ? 0.0 : potential[i]) + g2d * rho;
    const Complex diag = std::polar(1.0, -v * dt);
    const Complex* u = props.data() + i * d * d;
    for (std::size_t n = 0; n < d; ++n) {
      Complex acc{};
      for (std::size_t m = 0; m < d; ++m) acc += u[n * d + m] * in[m];
      out[n] = diag * acc;
    }
    for (std::size_t n = 0; n < d; ++n) ptr[n][i] = out[n];
  }
}

}  // namespace detail

/// Time step used for a pulse under `options`; throws if an explicit dt is too coarse.
inline double choose_dt(const LadderState& state, const PulseSpec& pulse,
                        const condensate::TrapSpec& trap, double g2d, const EvolveOptions& options) {
  const double rate = detail::fastest_rate(state, pulse, trap, g2d);
  if (options.dt > 0.0) {
    if (options.dt * rate > options.max_phase_step * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "dt = " << options.dt << " advances phase by " << options.dt * rate
         << " rad per step (limit " << options.max_phase_step << ")";
      throw NumericalGuard("step_size", os.str());
    }
    return options.dt;
  }
  return options.max_phase_step / rate;
}

/// Evolves the ladder through one square pulse by Strang splitting:
/// half kinetic, local (trap + meanfield + exact ladder exponential), half kinetic.
/// Interior kinetic half-steps are fused.
inline LadderState evolve_pulse(const LadderState& state, const PulseSpec& pulse,
                                const condensate::TrapSpec& trap, double g2d,
                                const EvolveOptions& options = {}) {
  state.check_consistent();
  if (!(pulse.duration > 0.0)) throw InvalidArgument("pulse duration must be positive");
  if (!(pulse.coupling.omega.grid() == state.grid())) {
    throw InvalidArgument("coupling map and state use different grids");
  }
  const double dt_max = choose_dt(state, pulse, trap, g2d, options);
  const auto steps = static_cast<std::size_t>(std::ceil(pulse.duration / dt_max - 1e-9));
  const double dt = pulse.duration / static_cast<double>(steps);

  const auto detunings = detuning_ladder(pulse.delta_nu, state.n_lo(), state.n_hi());
  const auto props = detail::ladder_propagators(pulse.coupling, detunings, dt);
  const auto half = detail::kinetic_phases(state.grid(), 0.5 * dt);
  const auto full = detail::kinetic_phases(state.grid(), dt);
  const std::vector<double> potential =
      pulse.trap_on ? trap.sample(state.grid()) : std::vector<double>{};

  const double norm_before = field_norm(state).total;
  LadderState out = state;
  detail::apply_kinetic(out, half);
  for (std::size_t s = 0; s < steps; ++s) {
    detail::apply_local(out, props, potential, g2d, dt);
    detail::apply_kinetic(out, s + 1 == steps ? half : full);
  }

  const auto pops = field_norm(out);
  if (!std::isfinite(pops.total)) throw NumericalGuard("non_finite", "state became non-finite");
  if (std::abs(pops.total - norm_before) > options.norm_tolerance) {
    std::ostringstream os;
    os << "norm changed by " << pops.total - norm_before;
    throw NumericalGuard("norm_drift", os.str());
  }
  if (options.edge_guard > 0.0) {
    const double edge = std::max(pops.at(out.n_lo()), pops.at(out.n_hi()));
    if (edge > options.edge_guard) {
      std::ostringstream os;
      os << "edge order population " << edge << " exceeds " << options.edge_guard
         << "; raise n_max";
      throw NumericalGuard("ladder_truncation", os.str());
    }
  }
  return out;
}

/// Coupling-free evolution (trap and meanfield only, lab frame delta_nu = 0).
inline LadderState free_evolve(const LadderState& state, double duration,
                               const condensate::TrapSpec& trap, double g2d, bool trap_on,
                               const EvolveOptions& options = {}) {
  const PulseSpec idle{optics::uniform_coupling(state.grid(), 0.0), 0.0, duration, trap_on};
  return evolve_pulse(state, idle, trap, g2d, options);
}

/// Energy of a ladder state with the coupling off:
/// sum_n <psi_n| T + V + Delta_n |psi_n> + (g/2) int rho^2.
inline double ladder_energy(const LadderState& state, const condensate::TrapSpec& trap,
                            bool trap_on, double g2d, double delta_nu) {
  const auto& grid = state.grid();
  const double da = grid.cell_area();
  const auto det = detuning_ladder(delta_nu, state.n_lo(), state.n_hi());
  const auto potential = trap.sample(grid);
  double e = 0.0;
  for (std::size_t n = 0; n < state.order_count(); ++n) {
    const auto& c = state.components()[n];
    auto spec = spectral_transform(c, Direction::Forward);
    double kin = 0.0;
    for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
      for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
        const double q2 = grid.q_y(iy) * grid.q_y(iy) + grid.q_z(iz) * grid.q_z(iz);
        kin += q2 * std::norm(spec(iy, iz));
      }
    }
    double pot = 0.0;
    if (trap_on) {
      const auto v = c.values();
      for (std::size_t i = 0; i < v.size(); ++i) pot += potential[i] * std::norm(v[i]);
    }
    e += da * (kin + pot) + det[n] * c.norm();
  }
  for (double r : state.total_density()) e += 0.5 * g2d * r * r * da;
  return e;
}

}  // namespace oamsim::dynamics
