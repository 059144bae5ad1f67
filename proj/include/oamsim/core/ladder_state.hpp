#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/field.hpp"

namespace oamsim {

/// Momentum-ladder state: one transverse wavefunction per axial order n, where
/// order n carries linear momentum n * 2 hbar k along x.
class LadderState {
 public:
  LadderState() = default;

  /// Orders n_lo..n_hi inclusive, all zero.
  LadderState(const Grid2D& grid, int n_lo, int n_hi) : grid_(grid), n_lo_(n_lo) {
    if (n_hi < n_lo) throw InvalidArgument("ladder order range is empty");
    components_.assign(static_cast<std::size_t>(n_hi - n_lo + 1), TransverseField(grid));
  }

  static LadderState symmetric(const Grid2D& grid, int n_max) {
    if (n_max < 1) throw InvalidArgument("n_max must be at least 1");
    return LadderState(grid, -n_max, n_max);
  }

  /// All amplitude in order 0.
  static LadderState from_ground(const TransverseField& ground, int n_max) {
    auto state = symmetric(ground.grid(), n_max);
    state.component(0) = ground;
    return state;
  }

  const Grid2D& grid() const { return grid_; }
  int n_lo() const { return n_lo_; }
  int n_hi() const { return n_lo_ + static_cast<int>(components_.size()) - 1; }
  std::size_t order_count() const { return components_.size(); }
  bool has_order(int n) const { return n >= n_lo() && n <= n_hi(); }

  TransverseField& component(int n) { return components_.at(slot(n)); }
  const TransverseField& component(int n) const { return components_.at(slot(n)); }
  std::vector<TransverseField>& components() { return components_; }
  const std::vector<TransverseField>& components() const { return components_; }

  /// Time since trap release (internal units); 0 while trapped.
  double release_time() const { return release_time_; }
  void set_release_time(double t) { release_time_ = t; }

  void check_consistent() const {
    for (const auto& c : components_) {
      if (!(c.grid() == grid_)) throw InvalidArgument("ladder components must share one grid");
    }
  }

  /// Total density sum_n |psi_n|^2 at each grid point.
  std::vector<double> total_density() const {
    std::vector<double> rho(grid_.size(), 0.0);
    for (const auto& c : components_) {
      const auto v = c.values();
      for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += std::norm(v[i]);
    }
    return rho;
  }

 private:
  std::size_t slot(int n) const {
    if (!has_order(n)) throw InvalidArgument("ladder order " + std::to_string(n) + " out of range");
    return static_cast<std::size_t>(n - n_lo_);
  }

  Grid2D grid_;
  int n_lo_ = 0;
  std::vector<TransverseField> components_;
  double release_time_ = 0.0;
};

struct Populations {
  int n_lo = 0;
  std::vector<double> per_order;
  double total = 0.0;

  double at(int n) const {
    const int i = n - n_lo;
    if (i < 0 || i >= static_cast<int>(per_order.size())) return 0.0;
    return per_order[static_cast<std::size_t>(i)];
  }
  int n_hi() const { return n_lo + static_cast<int>(per_order.size()) - 1; }
};

inline Populations field_norm(const LadderState& state) {
  Populations p;
  p.n_lo = state.n_lo();
  for (const auto& c : state.components()) p.per_order.push_back(c.norm());
  p.total = std::accumulate(p.per_order.begin(), p.per_order.end(), 0.0);
  return p;
}

}  // namespace oamsim
