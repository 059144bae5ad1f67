#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "oamsim/core/error.hpp"

namespace oamsim {

/// Uniform periodic 2D grid in the transverse (y, z) plane.
///
/// Storage order is row-major with y fastest: index = iz * n_y + iy.  The
/// position axis is centred so that index n/2 sits at coordinate 0.
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t n_y, std::size_t n_z, double extent_y, double extent_z)
      : n_y_(n_y), n_z_(n_z), extent_y_(extent_y), extent_z_(extent_z) {
    if (!is_power_of_two(n_y) || !is_power_of_two(n_z)) {
      throw InvalidArgument("grid dimensions must be powers of two");
    }
    if (!(extent_y > 0.0) || !(extent_z > 0.0)) {
      throw InvalidArgument("grid extents must be positive");
    }
  }

  std::size_t n_y() const { return n_y_; }
  std::size_t n_z() const { return n_z_; }
  std::size_t size() const { return n_y_ * n_z_; }
  double extent_y() const { return extent_y_; }
  double extent_z() const { return extent_z_; }
  double dy() const { return extent_y_ / static_cast<double>(n_y_); }
  double dz() const { return extent_z_ / static_cast<double>(n_z_); }
  double cell_area() const { return dy() * dz(); }

  double y(std::size_t iy) const { return (static_cast<double>(iy) - static_cast<double>(n_y_ / 2)) * dy(); }
  double z(std::size_t iz) const { return (static_cast<double>(iz) - static_cast<double>(n_z_ / 2)) * dz(); }

  /// Discrete-Fourier dual of the position axis (FFT ordering).
  double q_y(std::size_t iy) const { return wavenumber(iy, n_y_, extent_y_); }
  double q_z(std::size_t iz) const { return wavenumber(iz, n_z_, extent_z_); }
  double q_nyquist() const {
    return std::max(std::numbers::pi / dy(), std::numbers::pi / dz());
  }

  std::size_t index(std::size_t iy, std::size_t iz) const { return iz * n_y_ + iy; }

  /// Fractional grid coordinates of a physical point.
  double fy(double y) const { return y / dy() + static_cast<double>(n_y_ / 2); }
  double fz(double z) const { return z / dz() + static_cast<double>(n_z_ / 2); }

  bool operator==(const Grid2D& other) const {
    return n_y_ == other.n_y_ && n_z_ == other.n_z_ && extent_y_ == other.extent_y_ &&
           extent_z_ == other.extent_z_;
  }

  static bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

 private:
  static double wavenumber(std::size_t i, std::size_t n, double extent) {
    const auto signed_i = i < n / 2 ? static_cast<double>(i)
                                    : static_cast<double>(i) - static_cast<double>(n);
    return 2.0 * std::numbers::pi * signed_i / extent;
  }

  std::size_t n_y_ = 0;
  std::size_t n_z_ = 0;
  double extent_y_ = 0.0;
  double extent_z_ = 0.0;
};

}  // namespace oamsim
