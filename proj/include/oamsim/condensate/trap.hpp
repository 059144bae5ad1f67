#pragma once

#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/grid.hpp"
#include "oamsim/core/units.hpp"

namespace oamsim::condensate {

/// Transverse harmonic trap.  Angular frequencies are internal (omega / omega_r,
/// numerically equal to nu / nu_r); with mass 1/2 the potential is
/// V = (omega_y^2 y^2 + omega_z^2 z^2) / 4.
struct TrapSpec {
  double omega_y = 0.0;
  double omega_z = 0.0;

  static TrapSpec from_hz(double nu_y, double nu_z, const UnitSystem& units) {
    TrapSpec trap{units.frequency_to_recoil(nu_y), units.frequency_to_recoil(nu_z)};
    trap.validate();
    return trap;
  }

  void validate() const {
    if (!(omega_y >= 0.0) || !(omega_z >= 0.0)) {
      throw InvalidArgument("trap frequencies must be non-negative");
    }
  }

  double potential(double y, double z) const {
    return 0.25 * (omega_y * omega_y * y * y + omega_z * omega_z * z * z);
  }

  std::vector<double> sample(const Grid2D& grid) const {
    std::vector<double> v(grid.size());
    for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
      for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
        v[grid.index(iy, iz)] = potential(grid.y(iy), grid.z(iz));
      }
    }
    return v;
  }
};

}  // namespace oamsim::condensate
