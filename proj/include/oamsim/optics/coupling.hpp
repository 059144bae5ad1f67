#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "oamsim/core/error.hpp"
#include "oamsim/core/field.hpp"
#include "oamsim/optics/beam.hpp"

namespace oamsim::optics {

/// Position-dependent two-photon Rabi rate.  omega couples order n-1 to n:
/// upward steps pick up omega's phase, so oam_step is the winding imprinted per step.
struct CouplingMap {
  TransverseField omega;  // internal angular rate
  int oam_step = 0;
  double peak_rate = 0.0;

  /// Same spatial shape with a new peak rate.
  CouplingMap rescaled(double new_peak) const {
    if (!(new_peak >= 0.0)) throw InvalidArgument("peak rate must be non-negative");
    CouplingMap out = *this;
    if (peak_rate > 0.0) {
      out.omega *= new_peak / peak_rate;
    }
    out.peak_rate = new_peak;
    return out;
  }

  /// Adds a uniform phase to the coupling.
  CouplingMap phase_shifted(double theta) const {
    CouplingMap out = *this;
    out.omega *= std::polar(1.0, theta);
    return out;
  }
};

/// omega = peak_rate * u_a * conj(u_b) * exp(i rel_phase), normalised so max|omega| = peak_rate.
/// Beam a is the absorbed photon, beam b the stimulated-emission photon.
inline CouplingMap coupling_map(const BeamSpec& beam_a, const BeamSpec& beam_b, double peak_rate,
                                double rel_phase, const Grid2D& grid) {
  if (!(peak_rate > 0.0)) throw InvalidArgument("peak rate must be positive");
  if (beam_a.kind == BeamKind::LaguerreGauss && beam_b.kind == BeamKind::LaguerreGauss &&
      std::abs(beam_a.l - beam_b.l) > 2) {
    throw InvalidArgument("OAM step between LG beams exceeds 2");
  }
  const auto ua = mode_field(beam_a, grid);
  const auto ub = mode_field(beam_b, grid);
  CouplingMap map{TransverseField(grid), beam_a.charge() - beam_b.charge(), peak_rate};
  auto out = map.omega.values();
  const auto a = ua.values();
  const auto b = ub.values();
  double max_abs = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] * std::conj(b[i]);
    max_abs = std::max(max_abs, std::abs(out[i]));
  }
  if (!(max_abs > 0.0)) throw InvalidArgument("beams do not overlap on the grid");
  map.omega *= std::polar(peak_rate / max_abs, rel_phase);
  return map;
}

/// Spatially uniform coupling (plane-wave limit).
inline CouplingMap uniform_coupling(const Grid2D& grid, double peak_rate, double phase = 0.0) {
  CouplingMap map{TransverseField(grid), 0, peak_rate};
  for (auto& v : map.omega.values()) v = std::polar(peak_rate, phase);
  return map;
}

}  // namespace oamsim::optics
