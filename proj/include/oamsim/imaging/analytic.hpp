#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/grid.hpp"
#include "oamsim/core/image.hpp"

namespace oamsim::imaging {

enum class PatternKind {
  CounterRotating,        // |f_a e^{i phi} + f_b e^{-i phi} e^{i theta}|^2
  RotatingVsNonRotating,  // |f_a + f_b e^{i (phi + theta)}|^2, hole at phi = pi - theta
  DoublyVsNonRotating,    // |f_a + f_b e^{i (2 phi + theta)}|^2, two holes pi apart
};

using RadialProfile = std::function<double(double)>;

/// Calculated interference pattern from two real envelopes sampled on `grid`.
inline ImagePlane analytic_pattern(PatternKind kind, std::span<const double> f_a,
                                   std::span<const double> f_b, double theta, const Grid2D& grid) {
  if (f_a.size() != grid.size() || f_b.size() != grid.size()) {
    throw InvalidArgument("envelope size does not match grid");
  }
  ImagePlane image = ImagePlane::on_grid(grid, "analytic");
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const std::size_t i = grid.index(iy, iz);
      const double phi = std::atan2(grid.z(iz), grid.y(iy));
      std::complex<double> amp;
      switch (kind) {
        case PatternKind::CounterRotating:
          amp = f_a[i] * std::polar(1.0, phi) + f_b[i] * std::polar(1.0, theta - phi);
          break;
        case PatternKind::RotatingVsNonRotating:
          amp = f_a[i] + f_b[i] * std::polar(1.0, phi + theta);
          break;
        case PatternKind::DoublyVsNonRotating:
          amp = f_a[i] + f_b[i] * std::polar(1.0, 2.0 * phi + theta);
          break;
      }
      image.pixels[i] = std::norm(amp);
    }
  }
  return image;
}

/// Samples a radial profile f(rho) on the grid.
inline std::vector<double> sample_radial(const RadialProfile& f, const Grid2D& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      out[grid.index(iy, iz)] = f(std::hypot(grid.y(iy), grid.z(iz)));
    }
  }
  return out;
}

inline ImagePlane analytic_pattern(PatternKind kind, const RadialProfile& f_a,
                                   const RadialProfile& f_b, double theta, const Grid2D& grid) {
  const auto a = sample_radial(f_a, grid);
  const auto b = sample_radial(f_b, grid);
  return analytic_pattern(kind, a, b, theta, grid);
}

}  // namespace oamsim::imaging
