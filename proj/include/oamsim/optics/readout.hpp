#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "oamsim/core/error.hpp"
#include "oamsim/core/image.hpp"
#include "oamsim/optics/beam.hpp"

namespace oamsim {

inline double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a -= two_pi;
  return a;
}

inline double wrap_pi(double angle) {
  double a = wrap_two_pi(angle + std::numbers::pi) - std::numbers::pi;
  return a;
}

/// Intensity-weighted circular mean of the azimuth on a ring.  Returns 0 when
/// the first angular harmonic vanishes.
inline double ring_mean_angle(const ImagePlane& image, double radius, double center_y = 0.0,
                              double center_z = 0.0, std::size_t samples = 720) {
  std::complex<double> acc{};
  double total = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(samples);
    const double v =
        image.sample(center_y + radius * std::cos(phi), center_z + radius * std::sin(phi));
    acc += v * std::polar(1.0, phi);
    total += v;
  }
  if (std::abs(acc) <= 1e-12 * std::abs(total)) return 0.0;
  return wrap_two_pi(std::arg(acc));
}

namespace optics {

struct PhaseReadout {
  ImagePlane pattern;
  double angle = 0.0;  // azimuth of the intensity lobe, [0, 2 pi)
};

/// Interference of the LG beam (shifted by rel_phase) with a co-propagating
/// Gaussian.  The lobe sits where phi + rel_phase = 0, so angle = -rel_phase.
inline PhaseReadout phase_readout_pattern(const BeamSpec& beam_lg, const BeamSpec& beam_g,
                                          double rel_phase, const Grid2D& grid) {
  if (beam_lg.charge() == 0) throw InvalidArgument("phase readout needs a beam carrying OAM");
  const auto u_lg = mode_field(beam_lg, grid);
  const auto u_g = mode_field(beam_g, grid);
  PhaseReadout out{ImagePlane::on_grid(grid, "lg+g readout"), 0.0};
  const auto a = u_lg.values();
  const auto b = u_g.values();
  const auto shift = std::polar(1.0, rel_phase);
  double peak_a = 0.0;
  double peak_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.pattern.pixels[i] = std::norm(a[i] * shift + b[i]);
    peak_a = std::max(peak_a, std::abs(a[i]));
    peak_b = std::max(peak_b, std::abs(b[i]));
  }
  if (!(peak_a > 0.0) || !(peak_b > 0.0)) throw InvalidArgument("degenerate readout beam");
  out.angle = ring_mean_angle(out.pattern, beam_lg.ring_radius(), beam_lg.center_y, beam_lg.center_z);
  return out;
}

}  // namespace optics
}  // namespace oamsim
