#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/image.hpp"
#include "oamsim/optics/readout.hpp"

namespace oamsim::diagnostics {

struct Annulus {
  double inner = 0.0;
  double outer = 0.0;
};

/// Angular intensity profile over an annulus: bilinear samples on rings spaced
/// half a pixel apart, weighted by radius.
inline std::vector<double> angular_profile(const ImagePlane& image, Annulus annulus,
                                           std::size_t bins = 360, double center_y = 0.0,
                                           double center_z = 0.0) {
  if (!(annulus.outer > annulus.inner) || annulus.inner < 0.0) {
    throw InvalidArgument("annulus must satisfy 0 <= inner < outer");
  }
  const double half_y = 0.5 * double(image.n_y) * image.pitch;
  const double half_z = 0.5 * double(image.n_z) * image.pitch;
  if (std::abs(center_y) + annulus.outer >= half_y || std::abs(center_z) + annulus.outer >= half_z) {
    throw InvalidArgument("annulus extends beyond the image");
  }
  const auto rings = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(2.0 * (annulus.outer - annulus.inner) / image.pitch)));
  std::vector<double> profile(bins, 0.0);
  for (std::size_t r = 0; r < rings; ++r) {
    const double rho = annulus.inner + (annulus.outer - annulus.inner) * (double(r) + 0.5) / double(rings);
    for (std::size_t j = 0; j < bins; ++j) {
      const double phi = 2.0 * std::numbers::pi * double(j) / double(bins);
      profile[j] += rho * image.sample(center_y + rho * std::cos(phi), center_z + rho * std::sin(phi));
    }
  }
  return profile;
}

/// First-harmonic contrast 2 |<I e^{i phi}>| / <I> of an angular profile.
inline double angular_contrast(const std::vector<double>& profile) {
  std::complex<double> acc{};
  double total = 0.0;
  for (std::size_t j = 0; j < profile.size(); ++j) {
    acc += profile[j] * std::polar(1.0, 2.0 * std::numbers::pi * double(j) / double(profile.size()));
    total += profile[j];
  }
  return total > 0.0 ? 2.0 * std::abs(acc) / total : 0.0;
}

/// Azimuth of the single density hole in an annulus, from the circular mean of
/// the inverted intensity, in [0, 2 pi).  Patterns without a dominant single
/// hole (first-harmonic contrast below `min_contrast`) are rejected.  With
/// `focus` < 1 only the part of the profile below min + focus (max - min)
/// carries weight.
inline double hole_angle(const ImagePlane& image, Annulus annulus, double center_y = 0.0,
                         double center_z = 0.0, double min_contrast = 0.2, double focus = 1.0) {
  if (!(focus > 0.0 && focus <= 1.0)) throw InvalidArgument("focus must lie in (0, 1]");
  const auto profile = angular_profile(image, annulus, 720, center_y, center_z);
  const double contrast = angular_contrast(profile);
  if (contrast < min_contrast) {
    std::ostringstream os;
    os << "angular contrast " << contrast << " below " << min_contrast << "; no single hole";
    throw InvalidArgument(os.str());
  }
  const auto [lo, hi] = std::minmax_element(profile.begin(), profile.end());
  const double level = *lo + focus * (*hi - *lo);
  std::complex<double> acc{};
  for (std::size_t j = 0; j < profile.size(); ++j) {
    acc += std::max(0.0, level - profile[j]) *
           std::polar(1.0, 2.0 * std::numbers::pi * double(j) / double(profile.size()));
  }
  return wrap_two_pi(std::arg(acc));
}

/// The image divided by an envelope image sampled at the same positions.
/// Pixels where the envelope is below `floor` times its peak are set to zero.
inline ImagePlane divide_by_envelope(const ImagePlane& image, const ImagePlane& envelope,
                                     double floor = 1e-3) {
  const double cut = floor * envelope.max_value();
  ImagePlane out = image;
  for (std::size_t iz = 0; iz < image.n_z; ++iz) {
    for (std::size_t iy = 0; iy < image.n_y; ++iy) {
      const double y = (double(iy) - double(image.n_y / 2)) * image.pitch;
      const double z = (double(iz) - double(image.n_z / 2)) * image.pitch;
      const double e = envelope.sample(y, z);
      out.at(iy, iz) = e > cut ? image.at(iy, iz) / e : 0.0;
    }
  }
  return out;
}

/// The `count` deepest local minima of the angular profile (after a light
/// circular smoothing), refined by parabolic interpolation.  Sorted by depth.
inline std::vector<double> angular_minima(const ImagePlane& image, Annulus annulus,
                                          std::size_t count, double center_y = 0.0,
                                          double center_z = 0.0, std::size_t bins = 360) {
  auto raw = angular_profile(image, annulus, bins, center_y, center_z);
  const std::size_t n = raw.size();
  std::vector<double> p(n);
  for (std::size_t j = 0; j < n; ++j) {
    p[j] = 0.25 * raw[(j + n - 1) % n] + 0.5 * raw[j] + 0.25 * raw[(j + 1) % n];
  }
  std::vector<std::pair<double, double>> minima;  // (value, angle)
  const double step = 2.0 * std::numbers::pi / double(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = p[(j + n - 1) % n];
    const double b = p[j];
    const double c = p[(j + 1) % n];
    if (b < a && b <= c) {
      const double denom = a - 2.0 * b + c;
      const double offset = denom > 0.0 ? 0.5 * (a - c) / denom : 0.0;
      minima.emplace_back(b, wrap_two_pi((double(j) + offset) * step));
    }
  }
  std::sort(minima.begin(), minima.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < std::min(count, minima.size()); ++i) out.push_back(minima[i].second);
  return out;
}

}  // namespace oamsim::diagnostics
