#pragma once

#include <cmath>
#include <cstdlib>
#include <string>

#include "oamsim/core/error.hpp"
#include "oamsim/core/field.hpp"

namespace oamsim::optics {

enum class BeamKind { LaguerreGauss, Gaussian };

/// Transverse beam description at its waist.  Lengths are internal units.
struct BeamSpec {
  BeamKind kind = BeamKind::Gaussian;
  int l = 0;  // azimuthal index (LG only)
  int p = 0;  // radial index; only p = 0 is supported
  double waist = 1.0;
  double power_w = 0.0;  // bookkeeping only
  double center_y = 0.0;
  double center_z = 0.0;
  double phase = 0.0;

  static BeamSpec laguerre_gauss(int l, double waist) {
    return BeamSpec{BeamKind::LaguerreGauss, l, 0, waist};
  }
  static BeamSpec gaussian(double waist) { return BeamSpec{BeamKind::Gaussian, 0, 0, waist}; }

  /// Winding number carried by the mode.
  int charge() const { return kind == BeamKind::LaguerreGauss ? l : 0; }

  /// Radius of maximal intensity (0 for a Gaussian).
  double ring_radius() const { return waist * std::sqrt(std::abs(charge()) / 2.0); }

  void validate() const {
    if (!(waist > 0.0)) throw InvalidArgument("beam waist must be positive");
    if (kind == BeamKind::LaguerreGauss) {
      if (p != 0) throw InvalidArgument("only LG modes with p = 0 are supported");
      if (std::abs(l) > 2) throw InvalidArgument("only LG modes with |l| <= 2 are supported");
    }
  }
};

/// Unit-peak mode amplitude at the waist:
///   (rho/w)^|l| exp(-rho^2/w^2) exp(i l phi) / peak
/// with phi measured from +y toward +z about the beam centre.
inline TransverseField mode_field(const BeamSpec& beam, const Grid2D& grid) {
  beam.validate();
  const double half_extent = 0.5 * std::min(grid.extent_y(), grid.extent_z());
  if (beam.charge() != 0 && beam.ring_radius() >= half_extent) {
    throw InvalidArgument("LG ring radius does not fit inside the grid");
  }
  const int l = beam.charge();
  const double a = std::abs(l);
  const double peak = l == 0 ? 1.0 : std::pow(a / 2.0, a / 2.0) * std::exp(-a / 2.0);
  TransverseField field(grid);
  const double w2 = beam.waist * beam.waist;
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    const double z = grid.z(iz) - beam.center_z;
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const double y = grid.y(iy) - beam.center_y;
      const double rho2 = y * y + z * z;
      double amp = std::exp(-rho2 / w2) / peak;
      if (l != 0) amp *= std::pow(std::sqrt(rho2) / beam.waist, a);
      const double phi = (l != 0 && rho2 > 0.0) ? std::atan2(z, y) : 0.0;
      field(iy, iz) = std::polar(amp, l * phi + beam.phase);
    }
  }
  return field;
}

}  // namespace oamsim::optics
