#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/grid.hpp"

namespace oamsim {

/// Real non-negative 2D image.  Same layout and centring convention as Grid2D:
/// y fastest, pixel (n_y/2, n_z/2) at the origin.  Pitch is in internal length units.
struct ImagePlane {
  std::size_t n_y = 0;
  std::size_t n_z = 0;
  double pitch = 1.0;
  std::vector<double> pixels;
  std::string label;

  ImagePlane() = default;
  ImagePlane(std::size_t ny, std::size_t nz, double pitch_, std::string label_ = {})
      : n_y(ny), n_z(nz), pitch(pitch_), pixels(ny * nz, 0.0), label(std::move(label_)) {}

  static ImagePlane on_grid(const Grid2D& grid, std::string label = {}) {
    if (grid.dy() != grid.dz()) throw InvalidArgument("images require square pixels");
    return ImagePlane(grid.n_y(), grid.n_z(), grid.dy(), std::move(label));
  }

  double& at(std::size_t iy, std::size_t iz) { return pixels[iz * n_y + iy]; }
  double at(std::size_t iy, std::size_t iz) const { return pixels[iz * n_y + iy]; }

  double y(std::size_t iy) const {
    return (static_cast<double>(iy) - static_cast<double>(n_y / 2)) * pitch;
  }
  double z(std::size_t iz) const {
    return (static_cast<double>(iz) - static_cast<double>(n_z / 2)) * pitch;
  }

  double max_value() const {
    return pixels.empty() ? 0.0 : *std::max_element(pixels.begin(), pixels.end());
  }

  /// Bilinear sample at a physical point; zero outside the image.
  double sample(double y, double z) const {
    const double fy = y / pitch + static_cast<double>(n_y / 2);
    const double fz = z / pitch + static_cast<double>(n_z / 2);
    const double y0f = std::floor(fy);
    const double z0f = std::floor(fz);
    const double ty = fy - y0f;
    const double tz = fz - z0f;
    auto px = [&](double iyf, double izf) -> double {
      if (iyf < 0 || izf < 0 || iyf >= static_cast<double>(n_y) || izf >= static_cast<double>(n_z)) {
        return 0.0;
      }
      return at(static_cast<std::size_t>(iyf), static_cast<std::size_t>(izf));
    };
    return (1 - ty) * (1 - tz) * px(y0f, z0f) + ty * (1 - tz) * px(y0f + 1, z0f) +
           (1 - ty) * tz * px(y0f, z0f + 1) + ty * tz * px(y0f + 1, z0f + 1);
  }

  bool valid() const {
    return std::all_of(pixels.begin(), pixels.end(),
                       [](double p) { return std::isfinite(p) && p >= 0.0; });
  }
};

/// Rotates an image about its centre by `angle` (counter-clockwise from +y toward +z).
inline ImagePlane rotate_image(const ImagePlane& image, double angle) {
  ImagePlane out(image.n_y, image.n_z, image.pitch, image.label);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t iz = 0; iz < image.n_z; ++iz) {
    for (std::size_t iy = 0; iy < image.n_y; ++iy) {
      const double y = image.y(iy);
      const double z = image.z(iz);
      // Pull back through the inverse rotation.
      out.at(iy, iz) = std::max(0.0, image.sample(c * y + s * z, -s * y + c * z));
    }
  }
  return out;
}

}  // namespace oamsim
