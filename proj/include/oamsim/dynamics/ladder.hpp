#pragma once

#include <vector>

#include "oamsim/core/error.hpp"

namespace oamsim::dynamics {

/// Rotating-frame energy of order n (recoil units):
///   Delta_n = 4 n^2 - n * delta_nu
/// where 4 n^2 is the axial kinetic energy (2 n hbar k)^2 / 2M and delta_nu is in
/// multiples of nu_r.  Returned for orders n_lo..n_hi.
inline std::vector<double> detuning_ladder(double delta_nu, int n_lo, int n_hi) {
  if (n_hi < n_lo) throw InvalidArgument("empty ladder range");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
  for (int n = n_lo; n <= n_hi; ++n) {
    const double nd = n;
    out.push_back(4.0 * nd * nd - nd * delta_nu);
  }
  return out;
}

inline std::vector<double> detuning_ladder(double delta_nu, int n_max) {
  if (n_max < 1) throw InvalidArgument("n_max must be at least 1");
  return detuning_ladder(delta_nu, -n_max, n_max);
}

}  // namespace oamsim::dynamics
