#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "oamsim/condensate/trap.hpp"
#include "oamsim/core/error.hpp"
#include "oamsim/core/fft.hpp"
#include "oamsim/core/field.hpp"

namespace oamsim::condensate {

struct GroundState {
  TransverseField field;
  double chemical_potential = 0.0;
  double radius_y = 0.0;
  double radius_z = 0.0;
};

/// 2D Thomas-Fermi chemical potential for unit norm: mu = sqrt(g wy wz / (2 pi)).
inline double thomas_fermi_mu(const TrapSpec& trap, double g2d) {
  return std::sqrt(g2d * trap.omega_y * trap.omega_z / (2.0 * std::numbers::pi));
}

/// Interaction strength that puts the Thomas-Fermi edge along y at `radius_y`.
inline double calibrate_g2d(const TrapSpec& trap, double radius_y) {
  if (!(trap.omega_y > 0.0) || !(trap.omega_z > 0.0)) {
    throw InvalidArgument("calibration needs positive trap frequencies");
  }
  if (!(radius_y > 0.0)) throw InvalidArgument("Thomas-Fermi radius must be positive");
  const double mu = 0.25 * trap.omega_y * trap.omega_y * radius_y * radius_y;
  return 2.0 * std::numbers::pi * mu * mu / (trap.omega_y * trap.omega_z);
}

/// Density max(0, mu - V)/g with mu fixed by normalisation; radii R_i = 2 sqrt(mu) / omega_i.
inline GroundState thomas_fermi_profile(const TrapSpec& trap, double g2d, const Grid2D& grid) {
  if (!(g2d > 0.0)) throw InvalidArgument("Thomas-Fermi profile needs a positive interaction");
  if (!(trap.omega_y > 0.0) || !(trap.omega_z > 0.0)) {
    throw InvalidArgument("Thomas-Fermi profile needs positive trap frequencies");
  }
  GroundState gs;
  gs.chemical_potential = thomas_fermi_mu(trap, g2d);
  gs.radius_y = 2.0 * std::sqrt(gs.chemical_potential) / trap.omega_y;
  gs.radius_z = 2.0 * std::sqrt(gs.chemical_potential) / trap.omega_z;
  gs.field = TransverseField(grid);
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double n = std::max(0.0, gs.chemical_potential - trap.potential(grid.y(iy), grid.z(iz)));
      gs.field(iy, iz) = std::sqrt(n / g2d);
    }
  }
  gs.field.normalize();
  return gs;
}

/// Harmonic-oscillator-like Gaussian |psi|^2 ~ exp(-y^2/s_y^2 - z^2/s_z^2), unit norm.
inline TransverseField gaussian_field(const Grid2D& grid, double s_y, double s_z) {
  TransverseField f(grid);
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double y = grid.y(iy) / s_y;
      const double z = grid.z(iz) / s_z;
      f(iy, iz) = std::exp(-0.5 * (y * y + z * z));
    }
  }
  f.normalize();
  return f;
}

struct EnergyParts {
  double kinetic = 0.0;
  double potential = 0.0;
  double interaction = 0.0;  // (g/2) int |psi|^4
  double energy() const { return kinetic + potential + interaction; }
  double chemical_potential() const { return kinetic + potential + 2.0 * interaction; }
};

/// GP energy per particle of a normalised field (kinetic term evaluated spectrally).
inline EnergyParts gp_energy(const TransverseField& field, const std::vector<double>& potential,
                             double g2d) {
  const auto& grid = field.grid();
  const double da = grid.cell_area();
  EnergyParts e;
  auto spectrum = spectral_transform(field, Direction::Forward);
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    const double qz = grid.q_z(iz);
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double qy = grid.q_y(iy);
      e.kinetic += (qy * qy + qz * qz) * std::norm(spectrum(iy, iz));
    }
  }
  const auto v = field.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double n = std::norm(v[i]);
    e.potential += potential[i] * n;
    e.interaction += 0.5 * g2d * n * n;
  }
  e.kinetic *= da;
  e.potential *= da;
  e.interaction *= da;
  return e;
}

/// Radii from second moments, using <y^2> = R^2 / 6 for a 2D Thomas-Fermi profile.
inline std::pair<double, double> moment_radii(const TransverseField& field) {
  const auto& grid = field.grid();
  double sy = 0.0;
  double sz = 0.0;
  double n = 0.0;
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double d = std::norm(field(iy, iz));
      sy += d * grid.y(iy) * grid.y(iy);
      sz += d * grid.z(iz) * grid.z(iz);
      n += d;
    }
  }
  return {std::sqrt(6.0 * sy / n), std::sqrt(6.0 * sz / n)};
}

struct RelaxOptions {
  double dt = 0.0;  // internal time; 0 picks a stable default
  double tol = 1e-10;
  std::size_t max_steps = 200000;
};

struct RelaxResult {
  GroundState state;
  std::vector<double> energies;  // after each step
  std::size_t steps = 0;
};

/// Largest imaginary-time step allowed: dt * max(V_max, T_nyquist) < 0.5.
inline double max_stable_itp_dt(const TrapSpec& trap, const Grid2D& grid) {
  double vmax = 0.0;
  for (double v : trap.sample(grid)) vmax = std::max(vmax, v);
  const double qn = grid.q_nyquist();
  const double kin = 2.0 * qn * qn;
  return 0.5 / std::max(vmax, kin);
}

/// Imaginary-time split-step relaxation with renormalisation each step, until the
/// relative energy change per step drops below `tol`.
inline RelaxResult relax_ground_state(const GroundState& seed, const TrapSpec& trap, double g2d,
                                      RelaxOptions options = {}) {
  const auto& grid = seed.field.grid();
  const double dt_limit = max_stable_itp_dt(trap, grid);
  const double dt = options.dt > 0.0 ? options.dt : 0.8 * dt_limit;
  if (dt >= dt_limit) {
    std::ostringstream os;
    os << "imaginary-time step " << dt << " exceeds stability limit " << dt_limit;
    throw NumericalGuard("step_size", os.str());
  }
  const auto potential = trap.sample(grid);
  std::vector<double> half_kinetic(grid.size());
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double q2 = grid.q_y(iy) * grid.q_y(iy) + grid.q_z(iz) * grid.q_z(iz);
      half_kinetic[grid.index(iy, iz)] = std::exp(-0.5 * dt * q2);
    }
  }

  RelaxResult result;
  TransverseField psi = seed.field;
  psi.normalize();
  double energy = gp_energy(psi, potential, g2d).energy();
  auto data = psi.values();
  double residual = 0.0;
  for (std::size_t step = 0; step < options.max_steps; ++step) {
    transform_inplace(data, grid, Direction::Forward);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= half_kinetic[i];
    transform_inplace(data, grid, Direction::Inverse);
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] *= std::exp(-dt * (potential[i] + g2d * std::norm(data[i])));
    }
    transform_inplace(data, grid, Direction::Forward);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= half_kinetic[i];
    transform_inplace(data, grid, Direction::Inverse);
    psi.normalize();

    const double next = gp_energy(psi, potential, g2d).energy();
    result.energies.push_back(next);
    residual = std::abs(next - energy) / std::max(std::abs(next), 1e-300);
    energy = next;
    result.steps = step + 1;
    if (residual < options.tol) break;
  }
  if (residual >= options.tol) {
    std::ostringstream os;
    os << "no convergence after " << result.steps << " steps; final relative energy change "
       << residual;
    throw NumericalGuard("relax_convergence", os.str());
  }

  // Fix the global phase to zero at the density peak.
  std::size_t peak = 0;
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (std::norm(data[i]) > std::norm(data[peak])) peak = i;
  }
  psi *= std::conj(data[peak]) / std::abs(data[peak]);

  result.state.field = std::move(psi);
  result.state.chemical_potential =
      gp_energy(result.state.field, potential, g2d).chemical_potential();
  std::tie(result.state.radius_y, result.state.radius_z) = moment_radii(result.state.field);
  return result;
}

}  // namespace oamsim::condensate
