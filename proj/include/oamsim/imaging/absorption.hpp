#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/image.hpp"
#include "oamsim/core/ladder_state.hpp"

namespace oamsim::imaging {

struct ImagingOptions {
  double pitch = 0.0;       // 0: grid pitch
  double blur_sigma = 0.0;  // optional Gaussian blur (internal length)
  std::optional<std::uint64_t> noise_seed;  // seeded additive noise, off by default
  double noise_level = 0.0;                 // relative to the image peak
};

/// Axial speed of order n: momentum 2n hbar k gives 4n in internal units.
inline double axial_speed(int n) { return 4.0 * n; }

/// Transverse radius along y of the total density, sqrt(6 <y^2>).
inline double cloud_radius_y(const LadderState& state) {
  const auto& g = state.grid();
  const auto rho = state.total_density();
  double s = 0.0;
  double n = 0.0;
  for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
      s += rho[g.index(iy, iz)] * g.y(iy) * g.y(iy);
      n += rho[g.index(iy, iz)];
    }
  }
  return n > 0.0 ? std::sqrt(6.0 * s / n) : 0.0;
}

/// Orders n and m are spatially separated once t * |v_n - v_m| > 2 R_y.
inline bool orders_separated(const LadderState& state, int n, int m) {
  const double t = state.release_time();
  return t * std::abs(axial_speed(n) - axial_speed(m)) > 2.0 * cloud_radius_y(state);
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma_pixels) {
  const auto radius = static_cast<int>(std::ceil(4.0 * sigma_pixels));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma_pixels * sigma_pixels));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

inline void blur(ImagePlane& image, double sigma_pixels) {
  const auto k = gaussian_kernel(sigma_pixels);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(image.pixels.size(), 0.0);
  const auto ny = static_cast<int>(image.n_y);
  const auto nz = static_cast<int>(image.n_z);
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int y = iy + j;
        if (y >= 0 && y < ny) acc += k[static_cast<std::size_t>(j + r)] * image.pixels[static_cast<std::size_t>(iz * ny + y)];
      }
      tmp[static_cast<std::size_t>(iz * ny + iy)] = acc;
    }
  }
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int z = iz + j;
        if (z >= 0 && z < nz) acc += k[static_cast<std::size_t>(j + r)] * tmp[static_cast<std::size_t>(z * ny + iy)];
      }
      image.pixels[static_cast<std::size_t>(iz * ny + iy)] = acc;
    }
  }
}

}  // namespace detail

/// Ideal column-density image of the selected orders.  Orders that are still
/// co-located add coherently; separated clusters add as densities.
inline ImagePlane absorption_image(const LadderState& state, const std::set<int>& select,
                                   const ImagingOptions& options = {}) {
  if (select.empty()) throw InvalidArgument("absorption image needs at least one order");
  for (int n : select) {
    if (!state.has_order(n)) throw InvalidArgument("selected order outside the ladder");
  }
  const auto& g = state.grid();
  // Greedy clustering along the ordered selection.
  std::vector<std::vector<int>> clusters;
  for (int n : select) {
    if (!clusters.empty() && !orders_separated(state, clusters.back().front(), n)) {
      clusters.back().push_back(n);
    } else {
      clusters.push_back({n});
    }
  }
  std::string label = "orders";
  for (int n : select) label += " " + std::to_string(n);

  ImagePlane native = ImagePlane::on_grid(g, label);
  std::vector<Complex> sum(g.size());
  for (const auto& cluster : clusters) {
    std::fill(sum.begin(), sum.end(), Complex{});
    for (int n : cluster) {
      const auto v = state.component(n).values();
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
    }
    for (std::size_t i = 0; i < sum.size(); ++i) native.pixels[i] += std::norm(sum[i]);
  }

  ImagePlane image = native;
  if (options.pitch > 0.0 && std::abs(options.pitch - g.dy()) > 1e-12 * g.dy()) {
    auto count = [&](double extent) {
      auto n = static_cast<std::size_t>(std::floor(extent / options.pitch));
      return n - n % 2;
    };
    image = ImagePlane(count(g.extent_y()), count(g.extent_z()), options.pitch, label);
    for (std::size_t iz = 0; iz < image.n_z; ++iz) {
      for (std::size_t iy = 0; iy < image.n_y; ++iy) {
        image.at(iy, iz) = std::max(0.0, native.sample(image.y(iy), image.z(iz)));
      }
    }
  }
  if (options.blur_sigma > 0.0) detail::blur(image, options.blur_sigma / image.pitch);
  if (options.noise_seed && options.noise_level > 0.0) {
    std::mt19937_64 rng(*options.noise_seed);
    std::normal_distribution<double> noise(0.0, options.noise_level * image.max_value());
    for (auto& p : image.pixels) p = std::max(0.0, p + noise(rng));
  }
  return image;
}

}  // namespace oamsim::imaging
