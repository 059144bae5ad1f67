#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/grid.hpp"

namespace oamsim {

using Complex = std::complex<double>;

/// Complex scalar field sampled on a Grid2D.  Normalised fields satisfy
/// sum |psi|^2 dA = 1.
class TransverseField {
 public:
  TransverseField() = default;
  explicit TransverseField(Grid2D grid) : grid_(grid), values_(grid.size()) {}
  TransverseField(Grid2D grid, std::vector<Complex> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidArgument("field size does not match grid");
    }
  }

  const Grid2D& grid() const { return grid_; }
  std::span<Complex> values() { return values_; }
  std::span<const Complex> values() const { return values_; }
  std::vector<Complex>& data() { return values_; }
  const std::vector<Complex>& data() const { return values_; }

  Complex& operator()(std::size_t iy, std::size_t iz) { return values_[grid_.index(iy, iz)]; }
  const Complex& operator()(std::size_t iy, std::size_t iz) const {
    return values_[grid_.index(iy, iz)];
  }

  double norm() const {
    double sum = 0.0;
    for (const auto& v : values_) sum += std::norm(v);
    return sum * grid_.cell_area();
  }

  double peak_density() const {
    double peak = 0.0;
    for (const auto& v : values_) peak = std::max(peak, std::norm(v));
    return peak;
  }

  bool is_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](const Complex& v) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    });
  }

  TransverseField& operator*=(Complex s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  TransverseField& operator+=(const TransverseField& other) {
    if (!(other.grid_ == grid_)) throw InvalidArgument("field grids differ");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

  /// Rescales to unit norm; throws on a zero field.
  void normalize() {
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgument("cannot normalise a zero field");
    *this *= 1.0 / std::sqrt(n);
  }

  /// Bilinear interpolation at fractional grid coordinates (periodic wrap).
  Complex sample(double fy, double fz) const {
    const auto ny = static_cast<long>(grid_.n_y());
    const auto nz = static_cast<long>(grid_.n_z());
    const double y0f = std::floor(fy);
    const double z0f = std::floor(fz);
    const double ty = fy - y0f;
    const double tz = fz - z0f;
    auto wrap = [](long i, long n) { return static_cast<std::size_t>(((i % n) + n) % n); };
    const auto y0 = wrap(static_cast<long>(y0f), ny);
    const auto y1 = wrap(static_cast<long>(y0f) + 1, ny);
    const auto z0 = wrap(static_cast<long>(z0f), nz);
    const auto z1 = wrap(static_cast<long>(z0f) + 1, nz);
    return (1 - ty) * (1 - tz) * (*this)(y0, z0) + ty * (1 - tz) * (*this)(y1, z0) +
           (1 - ty) * tz * (*this)(y0, z1) + ty * tz * (*this)(y1, z1);
  }

 private:
  Grid2D grid_;
  std::vector<Complex> values_;
};

/// Relative L2 distance ||a - b|| / ||b||.
inline double relative_l2(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw InvalidArgument("relative_l2: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace oamsim
