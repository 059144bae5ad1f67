#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/field.hpp"

namespace oamsim {

enum class Direction { Forward, Inverse };

namespace detail {

// FFTW planning is not thread-safe; execution on new arrays is.  Plans are made
// once per shape with FFTW_ESTIMATE so results do not depend on timing.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n_y, std::size_t n_z, Direction dir) {
    const auto key = std::make_tuple(n_y, n_z, dir == Direction::Forward);
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<Complex> scratch(n_y * n_z);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n_z), static_cast<int>(n_y), buf, buf,
                                      dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Unitary in-place 2D DFT over a buffer laid out on `grid`.
inline void transform_inplace(std::span<Complex> data, const Grid2D& grid, Direction dir) {
  if (data.size() != grid.size()) throw InvalidArgument("transform: field/grid size mismatch");
  fftw_plan plan = detail::PlanCache::instance().get(grid.n_y(), grid.n_z(), dir);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.size()));
  for (auto& v : data) v *= scale;
}

/// Unitary forward/inverse transform; norm is preserved.
inline TransverseField spectral_transform(const TransverseField& field, Direction dir) {
  TransverseField out = field;
  transform_inplace(out.values(), out.grid(), dir);
  return out;
}

}  // namespace oamsim
