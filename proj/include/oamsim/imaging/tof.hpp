#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oamsim/core/error.hpp"
#include "oamsim/core/fft.hpp"
#include "oamsim/core/ladder_state.hpp"

namespace oamsim::imaging {

struct TofOptions {
  std::size_t pad_factor = 2;     // power of two, >= 2
  double meanfield_dt = 0.0;      // 0: 0.1 rad of peak meanfield phase per step
  double border_limit = 1e-6;     // max norm fraction allowed in the outer 10% band
};

/// Zero-embeds every component in a grid `factor` times larger per axis.
inline LadderState pad_state(const LadderState& state, std::size_t factor) {
  if (factor == 0 || (factor & (factor - 1)) != 0) {
    throw InvalidArgument("pad factor must be a power of two");
  }
  const auto& g = state.grid();
  const Grid2D big(g.n_y() * factor, g.n_z() * factor, g.extent_y() * double(factor),
                   g.extent_z() * double(factor));
  LadderState out(big, state.n_lo(), state.n_hi());
  out.set_release_time(state.release_time());
  const std::size_t oy = big.n_y() / 2 - g.n_y() / 2;
  const std::size_t oz = big.n_z() / 2 - g.n_z() / 2;
  for (int n = state.n_lo(); n <= state.n_hi(); ++n) {
    const auto& src = state.component(n);
    auto& dst = out.component(n);
    for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
      for (std::size_t iy = 0; iy < g.n_y(); ++iy) dst(iy + oy, iz + oz) = src(iy, iz);
    }
  }
  return out;
}

/// Fraction of the total norm lying in the outer 10% band of the grid.
inline double border_fraction(const LadderState& state) {
  const auto& g = state.grid();
  double edge = 0.0;
  double total = 0.0;
  const auto rho = state.total_density();
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      const double r = rho[g.index(iy, iz)];
      total += r;
      if (std::abs(g.y(iy)) > 0.4 * g.extent_y() || std::abs(g.z(iz)) > 0.4 * g.extent_z()) edge += r;
    }
  }
  return total > 0.0 ? edge / total : 0.0;
}

/// Ballistic release: pad, integrate the first `meanfield_window` with the
/// meanfield on (trap off, split-step), then propagate exactly with
/// exp(-i q^2 t) for the remainder.  Axial separation is bookkeeping only, via
/// the state's release time.
inline LadderState time_of_flight(const LadderState& state, double t, double meanfield_window,
                                  double g2d, const TofOptions& options = {}) {
  if (!(t >= 0.0)) throw InvalidArgument("time of flight must be non-negative");
  if (!(meanfield_window >= 0.0)) throw InvalidArgument("meanfield window must be non-negative");
  if (t == 0.0) return state;
  if (options.pad_factor < 2) throw InvalidArgument("time of flight needs pad_factor >= 2");
  LadderState out = pad_state(state, options.pad_factor);
  const auto& grid = out.grid();
  const double window = std::min(meanfield_window, t);

  auto kinetic = [&](double tau) {
    std::vector<Complex> phases(grid.size());
    for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
      for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
        const double q2 = grid.q_y(iy) * grid.q_y(iy) + grid.q_z(iz) * grid.q_z(iz);
        phases[grid.index(iy, iz)] = std::polar(1.0, -q2 * tau);
      }
    }
    return phases;
  };
  auto apply = [&](const std::vector<Complex>& phases) {
    for (auto& c : out.components()) {
      auto data = c.values();
      transform_inplace(data, grid, Direction::Forward);
      for (std::size_t i = 0; i < data.size(); ++i) data[i] *= phases[i];
      transform_inplace(data, grid, Direction::Inverse);
    }
  };

  if (window > 0.0 && g2d != 0.0) {
    double rho_max = 0.0;
    for (double r : out.total_density()) rho_max = std::max(rho_max, r);
    double dt = options.meanfield_dt > 0.0 ? options.meanfield_dt
                                           : 0.1 / std::max(std::abs(g2d) * rho_max, 1e-12);
    const auto steps = static_cast<std::size_t>(std::ceil(window / dt - 1e-9));
    dt = window / double(steps);
    const auto half = kinetic(0.5 * dt);
    const auto full = kinetic(dt);
    apply(half);
    for (std::size_t s = 0; s < steps; ++s) {
      const auto rho = out.total_density();
      for (auto& c : out.components()) {
        auto data = c.values();
        for (std::size_t i = 0; i < data.size(); ++i) data[i] *= std::polar(1.0, -g2d * rho[i] * dt);
      }
      apply(s + 1 == steps ? half : full);
    }
  } else if (window > 0.0) {
    apply(kinetic(window));
  }
  if (t > window) apply(kinetic(t - window));

  const double border = border_fraction(out);
  if (border > options.border_limit) {
    std::ostringstream os;
    os << "expanded cloud reaches the padded grid edge (fraction " << border
       << "); increase pad_factor to at least " << 2 * options.pad_factor;
    throw NumericalGuard("tof_padding", os.str());
  }
  out.set_release_time(state.release_time() + t);
  return out;
}

}  // namespace oamsim::imaging
