#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "oamsim/core/error.hpp"
#include "oamsim/core/fft.hpp"
#include "oamsim/core/field.hpp"

namespace oamsim::diagnostics {

struct LoopOptions {
  std::size_t min_samples = 64;
  double density_floor = 1e-6;  // relative to the field's peak density
};

struct WindingDetail {
  int winding = 0;
  double raw = 0.0;  // sum of wrapped phase steps / 2 pi before rounding
};

/// Phase winding around a circle: sum of wrapped phase differences between
/// consecutive bilinear samples, divided by 2 pi.
inline WindingDetail winding_detail(const TransverseField& field, double loop_radius,
                                    double center_y = 0.0, double center_z = 0.0,
                                    const LoopOptions& options = {}) {
  const auto& g = field.grid();
  if (!(loop_radius > 0.0)) throw InvalidArgument("loop radius must be positive");
  const double hy = 0.5 * g.extent_y();
  const double hz = 0.5 * g.extent_z();
  if (std::abs(center_y) >= hy || std::abs(center_z) >= hz) {
    throw InvalidArgument("loop centre outside the grid");
  }
  if (std::abs(center_y) + loop_radius >= hy - g.dy() || std::abs(center_z) + loop_radius >= hz - g.dz()) {
    throw InvalidArgument("loop leaves the grid");
  }
  const double pitch = std::min(g.dy(), g.dz());
  const auto samples = std::max(
      options.min_samples,
      static_cast<std::size_t>(std::ceil(8.0 * std::numbers::pi * loop_radius / pitch)));
  const double floor = options.density_floor * field.peak_density();

  auto at = [&](std::size_t j) {
    const double phi = 2.0 * std::numbers::pi * double(j) / double(samples);
    return field.sample(g.fy(center_y + loop_radius * std::cos(phi)),
                        g.fz(center_z + loop_radius * std::sin(phi)));
  };
  double total = 0.0;
  Complex prev = at(0);
  const Complex first = prev;
  for (std::size_t j = 1; j <= samples; ++j) {
    const Complex cur = j == samples ? first : at(j);
    if (std::norm(cur) < floor || std::norm(cur) == 0.0) {
      throw InvalidArgument("density on the loop is below the floor; phase undefined");
    }
    total += std::arg(cur * std::conj(prev));
    prev = cur;
  }
  WindingDetail out;
  out.raw = total / (2.0 * std::numbers::pi);
  out.winding = static_cast<int>(std::lround(out.raw));
  return out;
}

inline int winding_number(const TransverseField& field, double loop_radius, double center_y = 0.0,
                          double center_z = 0.0, const LoopOptions& options = {}) {
  return winding_detail(field, loop_radius, center_y, center_z, options).winding;
}

/// <L_z> / hbar = int psi* (y p_z - z p_y) psi / int |psi|^2 about a centre,
/// with p = -i d/dr evaluated spectrally.  Throws if the imaginary residual is
/// not negligible.
inline double oam_expectation(const TransverseField& field, double center_y = 0.0,
                              double center_z = 0.0) {
  const auto& g = field.grid();
  auto dy = spectral_transform(field, Direction::Forward);
  auto dz = dy;
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      dy(iy, iz) *= Complex(0.0, g.q_y(iy));
      dz(iy, iz) *= Complex(0.0, g.q_z(iz));
    }
  }
  transform_inplace(dy.values(), g, Direction::Inverse);
  transform_inplace(dz.values(), g, Direction::Inverse);
  Complex acc{};
  double norm = 0.0;
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    const double z = g.z(iz) - center_z;
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      const double y = g.y(iy) - center_y;
      const Complex psi = field(iy, iz);
      // L_z psi = -i (y d_z - z d_y) psi
      const Complex lz = Complex(0.0, -1.0) * (y * dz(iy, iz) - z * dy(iy, iz));
      acc += std::conj(psi) * lz;
      norm += std::norm(psi);
    }
  }
  if (!(norm > 0.0)) throw InvalidArgument("OAM of a zero field");
  const Complex value = acc / norm;
  if (std::abs(value.imag()) > 1e-10 * std::max(1.0, std::abs(value.real()))) {
    throw NumericalGuard("oam_imaginary", "L_z expectation has a non-negligible imaginary part");
  }
  return value.real();
}

struct VortexReport {
  int winding = 0;
  double l_z_expect = 0.0;
  double core_y = 0.0;
  double core_z = 0.0;
  double confidence = 0.0;  // |raw winding - integer|
};

/// Core located by a density-minimum search within half the loop radius of the
/// density centroid; winding measured on a loop around that core.
inline VortexReport vortex_report(const TransverseField& field, double loop_radius) {
  const auto& g = field.grid();
  double cy = 0.0;
  double cz = 0.0;
  double n = 0.0;
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      const double d = std::norm(field(iy, iz));
      cy += d * g.y(iy);
      cz += d * g.z(iz);
      n += d;
    }
  }
  if (!(n > 0.0)) throw InvalidArgument("vortex report of a zero field");
  cy /= n;
  cz /= n;
  const double search = 0.5 * loop_radius;
  double best = std::numeric_limits<double>::infinity();
  VortexReport report{0, 0.0, cy, cz, 0.0};
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      if (std::hypot(g.y(iy) - cy, g.z(iz) - cz) > search) continue;
      const double d = std::norm(field(iy, iz));
      if (d < best) {
        best = d;
        report.core_y = g.y(iy);
        report.core_z = g.z(iz);
      }
    }
  }
  const auto w = winding_detail(field, loop_radius, report.core_y, report.core_z);
  report.winding = w.winding;
  report.confidence = std::abs(w.raw - w.winding);
  report.l_z_expect = oam_expectation(field, report.core_y, report.core_z);
  return report;
}

}  // namespace oamsim::diagnostics
