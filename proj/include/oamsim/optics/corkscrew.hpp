#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/image.hpp"
#include "oamsim/core/io.hpp"
#include "oamsim/optics/beam.hpp"

namespace oamsim::optics {

/// Intensity sampled on x slices spanning one lattice period (pi / k).
struct CorkscrewVolume {
  Grid2D grid;
  std::vector<double> x;               // internal units
  std::vector<ImagePlane> slices;      // one per x sample
};

/// Dipole-potential intensity of counter-propagating LG (+x) and Gaussian (-x) beams:
///   I = |u_LG e^{i(kx - pi dnu t)} + u_G e^{-i(kx - pi dnu t)}|^2.
/// The cross term goes as cos(l phi + 2kx - 2 pi dnu t), so the bright locus
/// winds by -2 pi l over one period and drifts along +x at dnu * lambda / 2.
/// `delta_nu` is in multiples of nu_r and `t` in internal time.
inline CorkscrewVolume corkscrew_potential(const BeamSpec& beam_lg, const BeamSpec& beam_g,
                                           double delta_nu, double t, std::size_t x_samples,
                                           const Grid2D& grid) {
  if (x_samples < 8) throw InvalidArgument("corkscrew render needs at least 8 x samples");
  const auto u_lg = mode_field(beam_lg, grid);
  const auto u_g = mode_field(beam_g, grid);
  CorkscrewVolume vol{grid, {}, {}};
  const double period = std::numbers::pi;  // pi / k with k = 1
  for (std::size_t j = 0; j < x_samples; ++j) {
    const double x = period * static_cast<double>(j) / static_cast<double>(x_samples);
    const double xi = x - 0.5 * delta_nu * t;
    const auto fwd = std::polar(1.0, xi);
    const auto bwd = std::polar(1.0, -xi);
    ImagePlane slice = ImagePlane::on_grid(grid, "corkscrew");
    const auto a = u_lg.values();
    const auto b = u_g.values();
    for (std::size_t i = 0; i < a.size(); ++i) slice.pixels[i] = std::norm(a[i] * fwd + b[i] * bwd);
    vol.x.push_back(x);
    vol.slices.push_back(std::move(slice));
  }
  return vol;
}

/// Writes each slice as `<stem>_NNN.pgm` plus a volume sidecar `<stem>.meta`.
inline void write_corkscrew(const std::filesystem::path& dir, const std::string& stem,
                            const CorkscrewVolume& vol, const UnitSystem& units) {
  std::filesystem::create_directories(dir);
  double peak = 0.0;
  for (const auto& s : vol.slices) peak = std::max(peak, s.max_value());
  for (std::size_t j = 0; j < vol.slices.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "_%03zu.pgm", j);
    io::write_pgm16(dir / (stem + name), vol.slices[j], units,
                    {{"x_m", io::format_double(units.length_to_si(vol.x[j]))},
                     {"volume_peak", io::format_double(peak)}});
  }
  io::write_sidecar(dir / (stem + ".meta"),
                    {{"format", "corkscrew-stack"},
                     {"slices", std::to_string(vol.slices.size())},
                     {"lattice_period_m", io::format_double(units.length_to_si(std::numbers::pi))},
                     {"pitch_m", io::format_double(units.length_to_si(vol.grid.dy()))},
                     {"units", "relative intensity (unit-peak modes)"}});
}

}  // namespace oamsim::optics
