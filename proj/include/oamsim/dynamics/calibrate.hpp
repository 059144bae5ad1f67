#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "oamsim/condensate/ground_state.hpp"
#include "oamsim/dynamics/evolve.hpp"

namespace oamsim::dynamics {

struct CalibrationResult {
  double peak_rate = 0.0;
  double population = 0.0;                          // target-order population reached
  std::vector<std::pair<double, double>> samples;   // (peak_rate, population) evaluated
};

struct PiScan {
  double lo_factor = 0.25;  // scan from lo_factor * pi / duration ...
  double hi_factor = 4.0;   // ... to hi_factor * pi / duration, log-spaced
  std::size_t points = 16;
  double rate_tolerance = 1e-3;  // relative bracket width at which refinement stops
};

namespace detail {

class TransferProbe {
 public:
  TransferProbe(const LadderState& probe, const optics::CouplingMap& shape, double delta_nu,
                double duration, int target_order, const condensate::TrapSpec& trap, double g2d,
                const EvolveOptions& options)
      : probe_(probe), shape_(shape), delta_nu_(delta_nu), duration_(duration),
        target_(target_order), trap_(trap), g2d_(g2d), options_(options) {
    if (!(duration > 0.0)) throw InvalidArgument("pulse duration must be positive");
    if (!probe.has_order(target_order)) throw InvalidArgument("target order outside the ladder");
  }

  double operator()(double rate) {
    const PulseSpec pulse{shape_.rescaled(rate), delta_nu_, duration_, true};
    const auto out = evolve_pulse(probe_, pulse, trap_, g2d_, options_);
    const double p = field_norm(out).at(target_);
    samples.emplace_back(rate, p);
    return p;
  }

  std::vector<std::pair<double, double>> samples;

 private:
  const LadderState& probe_;
  const optics::CouplingMap& shape_;
  double delta_nu_;
  double duration_;
  int target_;
  const condensate::TrapSpec& trap_;
  double g2d_;
  EvolveOptions options_;
};

}  // namespace detail

/// Finds the peak Rabi rate that maximises the population of `target_order`
/// after one square pulse: coarse log scan, then golden-section refinement
/// around the best interior point.
inline CalibrationResult calibrate_pi_pulse(const LadderState& probe,
                                            const optics::CouplingMap& shape, double delta_nu,
                                            double duration, int target_order,
                                            const condensate::TrapSpec& trap, double g2d,
                                            const EvolveOptions& options = {}, PiScan scan = {}) {
  if (scan.points < 3) throw InvalidArgument("pi-pulse scan needs at least 3 points");
  detail::TransferProbe transfer(probe, shape, delta_nu, duration, target_order, trap, g2d, options);
  const double base = std::numbers::pi / duration;
  std::vector<double> rates(scan.points);
  std::vector<double> pops(scan.points);
  const double ratio = std::pow(scan.hi_factor / scan.lo_factor, 1.0 / double(scan.points - 1));
  for (std::size_t i = 0; i < scan.points; ++i) {
    rates[i] = base * scan.lo_factor * std::pow(ratio, double(i));
    pops[i] = transfer(rates[i]);
  }
  // First local maximum along increasing rate: that is the pi pulse.
  std::size_t best = 0;
  for (std::size_t i = 1; i + 1 < scan.points; ++i) {
    if (pops[i] >= pops[i - 1] && pops[i] >= pops[i + 1]) {
      best = i;
      break;
    }
  }
  if (best == 0) {
    std::ostringstream os;
    os << "no interior maximum of the transferred population between " << rates.front()
       << " and " << rates.back() << " (internal rate units)";
    throw NumericalGuard("pi_calibration", os.str());
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = rates[best - 1];
  double b = rates[best + 1];
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = transfer(c);
  double fd = transfer(d);
  while ((b - a) > scan.rate_tolerance * rates[best]) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = transfer(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = transfer(d);
    }
  }
  CalibrationResult result;
  result.peak_rate = fc > fd ? c : d;
  result.population = std::max(fc, fd);
  if (pops[best] > result.population) {
    result.peak_rate = rates[best];
    result.population = pops[best];
  }
  result.samples = std::move(transfer.samples);
  return result;
}

/// Convenience overload starting from a ground state in order 0.
inline CalibrationResult calibrate_pi_pulse(const condensate::GroundState& ground,
                                            const optics::CouplingMap& shape, double delta_nu,
                                            double duration, const condensate::TrapSpec& trap,
                                            double g2d, int n_max = 3,
                                            const EvolveOptions& options = {}, PiScan scan = {}) {
  return calibrate_pi_pulse(LadderState::from_ground(ground.field, n_max), shape, delta_nu,
                            duration, 1, trap, g2d, options, scan);
}

/// Smallest peak rate for which the target-order population reaches `fraction`
/// (first rise of the Rabi curve), by geometric bracketing then bisection.
inline CalibrationResult calibrate_fraction(const LadderState& probe,
                                            const optics::CouplingMap& shape, double delta_nu,
                                            double duration, int target_order, double fraction,
                                            const condensate::TrapSpec& trap, double g2d,
                                            const EvolveOptions& options = {},
                                            double tolerance = 1e-4) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("target fraction must lie in (0, 1)");
  }
  detail::TransferProbe transfer(probe, shape, delta_nu, duration, target_order, trap, g2d, options);
  const double base = std::numbers::pi / duration;
  double lo = 0.0;
  double hi = 0.05 * base;
  double p_hi = transfer(hi);
  double p_prev = 0.0;
  while (p_hi < fraction) {
    if (hi > 64.0 * base || p_hi < p_prev) {
      std::ostringstream os;
      os << "population never reaches " << fraction << " (best " << std::max(p_hi, p_prev) << ")";
      throw NumericalGuard("fraction_calibration", os.str());
    }
    lo = hi;
    p_prev = p_hi;
    hi *= 1.5;
    p_hi = transfer(hi);
  }
  CalibrationResult result{hi, p_hi, {}};
  for (int it = 0; it < 60 && std::abs(result.population - fraction) > tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = transfer(mid);
    if (p < fraction) {
      lo = mid;
    } else {
      hi = mid;
    }
    result = {mid, p, {}};
  }
  result.samples = std::move(transfer.samples);
  return result;
}

/// State holding only `order`'s component of `state`, renormalised.
inline LadderState isolate_order(const LadderState& state, int order) {
  LadderState probe(state.grid(), state.n_lo(), state.n_hi());
  probe.component(order) = state.component(order);
  probe.component(order).normalize();
  return probe;
}

}  // namespace oamsim::dynamics
