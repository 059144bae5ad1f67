#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <vector>

#include "oamsim/core/io.hpp"
#include "oamsim/dynamics/evolve.hpp"

namespace oamsim::dynamics {

struct SequenceStep {
  PulseSpec pulse;
  double delay_after = 0.0;  // free evolution after the pulse, internal time
};

/// Ordered pulses sharing one grid.  Ladder amplitudes carry over unchanged
/// between pulses; each pulse's coupling phase is its optical phase difference
/// at the pulse start.
struct SequenceSpec {
  std::vector<SequenceStep> steps;
};

struct PulseLogEntry {
  std::size_t index = 0;
  double delta_nu = 0.0;
  double duration = 0.0;
  double peak_rate = 0.0;
  Populations populations;
};

struct SequenceResult {
  LadderState state;
  std::vector<PulseLogEntry> log;
};

inline SequenceResult run_sequence(const LadderState& state, const SequenceSpec& seq,
                                   const condensate::TrapSpec& trap, double g2d,
                                   const EvolveOptions& options = {}) {
  for (const auto& step : seq.steps) {
    if (!(step.pulse.coupling.omega.grid() == state.grid())) {
      throw InvalidArgument("all pulses in a sequence must share the state grid");
    }
  }
  SequenceResult result{state, {}};
  for (std::size_t i = 0; i < seq.steps.size(); ++i) {
    const auto& step = seq.steps[i];
    result.state = evolve_pulse(result.state, step.pulse, trap, g2d, options);
    if (step.delay_after > 0.0) {
      result.state = free_evolve(result.state, step.delay_after, trap, g2d, step.pulse.trap_on, options);
    }
    result.log.push_back({i, step.pulse.delta_nu, step.pulse.duration, step.pulse.coupling.peak_rate,
                          field_norm(result.state)});
  }
  return result;
}

/// Tab-separated log: pulse, delta_nu_over_nu_r, duration_s, peak_rate_rad_per_s, P_n...
inline void write_population_log(const std::filesystem::path& path,
                                 const std::vector<PulseLogEntry>& log, const UnitSystem& units) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "pulse\tdelta_nu_over_nu_r\tduration_s\tpeak_rate_rad_per_s";
  if (!log.empty()) {
    for (int n = log.front().populations.n_lo; n <= log.front().populations.n_hi(); ++n) {
      out << "\tP_" << n;
    }
  }
  out << '\n' << std::setprecision(12);
  for (const auto& e : log) {
    out << e.index << '\t' << e.delta_nu << '\t' << units.time_to_si(e.duration) << '\t'
        << units.rate_to_si(e.peak_rate);
    for (double p : e.populations.per_order) out << '\t' << p;
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace oamsim::dynamics
