#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oamsim/condensate/ground_state.hpp"
#include "oamsim/core/io.hpp"
#include "oamsim/diagnostics/correlation.hpp"
#include "oamsim/diagnostics/hole_angle.hpp"
#include "oamsim/diagnostics/winding.hpp"
#include "oamsim/dynamics/calibrate.hpp"
#include "oamsim/dynamics/sequence.hpp"
#include "oamsim/imaging/absorption.hpp"
#include "oamsim/imaging/analytic.hpp"
#include "oamsim/imaging/tof.hpp"
#include "oamsim/optics/corkscrew.hpp"
#include "oamsim/optics/readout.hpp"
#include "oamsim/scenarios/config.hpp"

namespace oamsim::scenarios {

struct RunOptions {
  std::size_t threads = 0;  // 0: use the config's study.threads
  int verbosity = 0;
  std::ostream* log = nullptr;
  bool write_outputs = true;
};

/// Ordered key/value results; values are stored as text so that the table
/// written to disk is exactly what callers inspect.
class Summary {
 public:
  void add(const std::string& key, double value) { entries_.emplace_back(key, io::format_double(value)); }
  void add(const std::string& key, int value) { entries_.emplace_back(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { entries_.emplace_back(key, std::to_string(value)); }
  void add_text(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

  bool contains(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.first == key) return true;
    }
    return false;
  }

  const std::string& text(const std::string& key) const {
    for (const auto& e : entries_) {
      if (e.first == key) return e.second;
    }
    throw InvalidArgument("summary has no entry \"" + key + "\"");
  }

  double number(const std::string& key) const { return std::stod(text(key)); }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct ResolvedPulse {
  dynamics::PulseSpec spec;
  double delay = 0.0;             // internal time
  double calibration_population = 0.0;
  double calibration_scan_max = 0.0;  // largest target population seen while calibrating
  std::size_t calibration_evaluations = 0;
};

struct SequenceRun {
  std::vector<ResolvedPulse> pulses;
  std::vector<LadderState> states;  // states[k]: after k pulses
  std::vector<dynamics::PulseLogEntry> log;
};

struct PatternFit {
  double theta = 0.0;
  double weight = 1.0;
  double correlation = 0.0;
  ImagePlane pattern;
};

/// Envelope moduli on an image grid: non-rotating cloud, and the cloud shaped
/// by one or two powers of the LG coupling modulus.
struct Envelopes {
  Grid2D grid;
  std::vector<double> e0;
  std::vector<double> e1;
  std::vector<double> e2;
};

/// Fits orientation theta (and optionally the weight of f_b) of an analytic
/// pattern to an image.  The pattern is linear in four basis images, so the
/// correlation is evaluated in closed form over a dense parameter grid.
inline PatternFit fit_pattern(imaging::PatternKind kind, std::span<const double> f_a,
                              std::span<const double> f_b, const ImagePlane& image,
                              const Grid2D& grid, bool fit_weight) {
  const std::size_t n = grid.size();
  if (image.pixels.size() != n) throw InvalidArgument("image does not match the envelope grid");
  const int harmonic = kind == imaging::PatternKind::CounterRotating        ? -2
                       : kind == imaging::PatternKind::RotatingVsNonRotating ? 1
                                                                             : 2;
  std::array<std::vector<double>, 4> basis;
  for (auto& b : basis) b.resize(n);
  for (std::size_t iz = 0; iz < grid.n_z(); ++iz) {
    for (std::size_t iy = 0; iy < grid.n_y(); ++iy) {
      const std::size_t i = grid.index(iy, iz);
      const double phi = std::atan2(grid.z(iz), grid.y(iy));
      const double ab = f_a[i] * f_b[i];
      basis[0][i] = f_a[i] * f_a[i];
      basis[1][i] = f_b[i] * f_b[i];
      basis[2][i] = ab * std::cos(harmonic * phi);
      basis[3][i] = ab * std::sin(harmonic * phi);
    }
  }
  std::array<double, 4> mean{};
  double img_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) mean[k] += basis[k][i];
    img_mean += image.pixels[i];
  }
  for (auto& m : mean) m /= double(n);
  img_mean /= double(n);
  std::array<double, 4> cov{};
  std::array<std::array<double, 4>, 4> gram{};
  double img_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = image.pixels[i] - img_mean;
    img_var += d * d;
    std::array<double, 4> b;
    for (int k = 0; k < 4; ++k) b[k] = basis[k][i] - mean[k];
    for (int k = 0; k < 4; ++k) {
      cov[k] += b[k] * d;
      for (int l = k; l < 4; ++l) gram[k][l] += b[k] * b[l];
    }
  }
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < k; ++l) gram[k][l] = gram[l][k];
  }
  auto correlation = [&](double w, double theta) {
    const std::array<double, 4> a{1.0, w * w, 2.0 * w * std::cos(theta), -2.0 * w * std::sin(theta)};
    double num = 0.0;
    double var = 0.0;
    for (int k = 0; k < 4; ++k) {
      num += a[k] * cov[k];
      for (int l = 0; l < 4; ++l) var += a[k] * gram[k][l] * a[l];
    }
    return var > 0.0 && img_var > 0.0 ? num / std::sqrt(var * img_var) : 0.0;
  };

  PatternFit fit;
  fit.correlation = -2.0;
  const int n_theta = 1440;
  const int n_weight = fit_weight ? 401 : 1;
  for (int iw = 0; iw < n_weight; ++iw) {
    const double w = fit_weight ? std::pow(10.0, -2.0 + 4.0 * iw / double(n_weight - 1)) : 1.0;
    for (int it = 0; it < n_theta; ++it) {
      const double theta = 2.0 * std::numbers::pi * it / double(n_theta);
      const double c = correlation(w, theta);
      if (c > fit.correlation) {
        fit = {theta, w, c, {}};
      }
    }
  }
  std::vector<double> scaled_b(f_b.begin(), f_b.end());
  for (auto& v : scaled_b) v *= fit.weight;
  fit.pattern = imaging::analytic_pattern(kind, f_a, scaled_b, fit.theta, grid);
  fit.correlation = diagnostics::normalized_cross_correlation(fit.pattern, image);
  return fit;
}

/// Holds the prepared condensate and converts config quantities to internal units.
class Experiment {
 public:
  using Logger = std::function<void(int, const std::string&)>;

  explicit Experiment(ExperimentConfig config, Logger logger = {})
      : cfg_(std::move(config)),
        logger_(std::move(logger)),
        units_(cfg_.physical),
        grid_(std::size_t(cfg_.grid.points_y), std::size_t(cfg_.grid.points_z),
              units_.length_to_internal(cfg_.grid.extent_y_m),
              units_.length_to_internal(cfg_.grid.extent_z_m)),
        trap_(condensate::TrapSpec::from_hz(cfg_.physical.trap_freqs_hz[1],
                                            cfg_.physical.trap_freqs_hz[2], units_)) {
    g2d_ = cfg_.condensate.g2d_j_m2 > 0.0
               ? units_.coupling2d_to_internal(cfg_.condensate.g2d_j_m2)
               : condensate::calibrate_g2d(trap_, units_.length_to_internal(cfg_.condensate.tf_radius_y_m));
    for (const auto& [name, beam] : cfg_.beams) {
      if (beam.kind == "lg") {
        const auto spec = to_beam(beam);
        spec.validate();
        if (spec.ring_radius() >= 0.5 * std::min(grid_.extent_y(), grid_.extent_z())) {
          throw InvalidArgument("beams." + name + ": LG ring radius exceeds half the grid extent");
        }
      }
    }
    prepare_ground_state();
  }

  const ExperimentConfig& config() const { return cfg_; }
  const UnitSystem& units() const { return units_; }
  const Grid2D& grid() const { return grid_; }
  const condensate::TrapSpec& trap() const { return trap_; }
  double g2d() const { return g2d_; }
  const condensate::GroundState& ground() const { return ground_; }
  std::size_t relax_steps() const { return relax_steps_; }

  LadderState initial_state() const {
    return LadderState::from_ground(ground_.field, cfg_.numerics.n_max);
  }

  optics::BeamSpec beam(const std::string& name) const {
    const auto it = cfg_.beams.find(name);
    if (it == cfg_.beams.end()) throw InvalidArgument("unknown beam \"" + name + "\"");
    return to_beam(it->second);
  }

  /// Unit-peak coupling of a pulse.
  optics::CouplingMap coupling_shape(const PulseConfig& p) const {
    return optics::coupling_map(beam(p.beam_a), beam(p.beam_b), 1.0, p.rel_phase_rad, grid_);
  }

  dynamics::EvolveOptions evolve_options() const {
    dynamics::EvolveOptions o;
    o.dt = units_.time_to_internal(cfg_.numerics.dt_s);
    o.max_phase_step = cfg_.numerics.max_phase_step_rad;
    o.edge_guard = cfg_.numerics.edge_guard;
    o.norm_tolerance = cfg_.numerics.norm_tolerance;
    return o;
  }

  /// Fixes the peak rate of a pulse from its Rabi mode, given the state it acts on.
  ResolvedPulse resolve(const PulseConfig& p, const LadderState& before) const {
    const auto shape = coupling_shape(p);
    const double duration = units_.time_to_internal(p.duration_s);
    const auto& rabi = p.rabi;
    ResolvedPulse out;
    out.delay = units_.time_to_internal(p.delay_after_s);
    double rate = 0.0;
    if (rabi.mode == "fixed") {
      rate = units_.rate_to_internal(rabi.peak_rate_rad_per_s);
    } else {
      const auto pops = field_norm(before);
      if (!before.has_order(rabi.source_order) || !before.has_order(rabi.target_order)) {
        throw InvalidArgument("pulse \"" + p.label + "\": calibration orders outside the ladder");
      }
      if (pops.at(rabi.source_order) < 1e-6) {
        throw NumericalGuard("calibration_source", "pulse \"" + p.label + "\": source order " +
                                                       std::to_string(rabi.source_order) +
                                                       " is empty");
      }
      const auto probe = dynamics::isolate_order(before, rabi.source_order);
      dynamics::CalibrationResult cal;
      if (rabi.mode == "pi") {
        dynamics::PiScan scan{cfg_.numerics.pi_scan_lo_factor, cfg_.numerics.pi_scan_hi_factor,
                              std::size_t(cfg_.numerics.pi_scan_points),
                              cfg_.numerics.pi_rate_tolerance};
        cal = dynamics::calibrate_pi_pulse(probe, shape, p.delta_nu_in_nu_r, duration,
                                           rabi.target_order, trap_, g2d_, evolve_options(), scan);
      } else {
        double fraction = rabi.fraction;
        if (rabi.mode == "balance") {
          const double pt = pops.at(rabi.target_order);
          fraction = pt / (pt + pops.at(rabi.source_order));
          if (!(fraction > 0.0 && fraction < 1.0)) {
            throw NumericalGuard("balance_calibration",
                                 "pulse \"" + p.label + "\": target order is empty");
          }
        }
        cal = dynamics::calibrate_fraction(probe, shape, p.delta_nu_in_nu_r, duration,
                                           rabi.target_order, fraction, trap_, g2d_,
                                           evolve_options(), cfg_.numerics.fraction_tolerance);
      }
      rate = cal.peak_rate;
      out.calibration_population = cal.population;
      out.calibration_evaluations = cal.samples.size();
      for (const auto& sample : cal.samples) {
        out.calibration_scan_max = std::max(out.calibration_scan_max, sample.second);
      }
    }
    out.spec = {shape.rescaled(rate), p.delta_nu_in_nu_r, duration, p.trap_on};
    return out;
  }

  /// Resolves and applies the configured pulses in order.
  SequenceRun run(const LadderState& initial) const {
    SequenceRun run;
    run.states.push_back(initial);
    for (std::size_t i = 0; i < cfg_.sequence.size(); ++i) {
      const auto& p = cfg_.sequence[i];
      auto resolved = resolve(p, run.states.back());
      log(1, "pulse " + std::to_string(i) + " (" + p.label + "): peak rate " +
                 io::format_double(units_.rate_to_si(resolved.spec.coupling.peak_rate)) +
                 " rad/s");
      auto next = apply(resolved, run.states.back());
      run.log.push_back({i, resolved.spec.delta_nu, resolved.spec.duration,
                         resolved.spec.coupling.peak_rate, field_norm(next)});
      run.states.push_back(std::move(next));
      run.pulses.push_back(std::move(resolved));
    }
    return run;
  }

  LadderState apply(const ResolvedPulse& pulse, const LadderState& state) const {
    auto next = dynamics::evolve_pulse(state, pulse.spec, trap_, g2d_, evolve_options());
    if (pulse.delay > 0.0) {
      next = dynamics::free_evolve(next, pulse.delay, trap_, g2d_, pulse.spec.trap_on, evolve_options());
    }
    return next;
  }

  LadderState expand(const LadderState& state) const {
    imaging::TofOptions o;
    o.pad_factor = std::size_t(cfg_.imaging.pad_factor);
    return imaging::time_of_flight(state, units_.time_to_internal(cfg_.imaging.tof_s),
                                   units_.time_to_internal(cfg_.imaging.meanfield_window_s), g2d_, o);
  }

  imaging::ImagingOptions imaging_options(std::uint64_t stream, bool native_pitch) const {
    imaging::ImagingOptions o;
    o.pitch = native_pitch ? 0.0 : units_.length_to_internal(cfg_.imaging.pitch_m);
    o.blur_sigma = units_.length_to_internal(cfg_.imaging.blur_sigma_m);
    o.noise_level = cfg_.imaging.noise_level;
    if (o.noise_level > 0.0) o.noise_seed = cfg_.seed + stream;
    return o;
  }

  /// Envelopes of the prepared cloud, rescaled by the expansion of `before`
  /// into `after` and sampled on the grid of `after`.
  Envelopes envelopes(const LadderState& before, const LadderState& after,
                      const optics::CouplingMap& lg_shape) const {
    const auto [sy0, sz0] = density_spread(before);
    const auto [sy1, sz1] = density_spread(after);
    const double scale_y = sy1 / sy0;
    const double scale_z = sz1 / sz0;
    const auto& g = after.grid();
    Envelopes env{g, std::vector<double>(g.size()), std::vector<double>(g.size()),
                  std::vector<double>(g.size())};
    const auto psi = ground_.field.values();
    const auto c = lg_shape.omega.values();
    double c_peak = 0.0;
    for (const auto& v : c) c_peak = std::max(c_peak, std::abs(v));
    for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
      for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
        const double y = g.y(iy) / scale_y;
        const double z = g.z(iz) / scale_z;
        const double a0 = sample_abs(psi, y, z);
        const double cm = sample_abs(c, y, z) / c_peak;
        const std::size_t i = g.index(iy, iz);
        env.e0[i] = a0;
        env.e1[i] = a0 * cm;
        env.e2[i] = a0 * cm * cm;
      }
    }
    return env;
  }

  void log(int level, const std::string& message) const {
    if (logger_) logger_(level, message);
  }

 private:
  optics::BeamSpec to_beam(const BeamConfig& b) const {
    optics::BeamSpec spec = b.kind == "lg"
                                ? optics::BeamSpec::laguerre_gauss(b.charge, units_.length_to_internal(b.waist_m))
                                : optics::BeamSpec::gaussian(units_.length_to_internal(b.waist_m));
    spec.power_w = b.power_w;
    spec.center_y = units_.length_to_internal(b.center_y_m);
    spec.center_z = units_.length_to_internal(b.center_z_m);
    spec.phase = b.phase_rad;
    return spec;
  }

  void prepare_ground_state() {
    const auto& file = cfg_.condensate.ground_state_file;
    if (!file.empty()) {
      auto dump = io::read_field_dump(file);
      const auto& dg = dump.field.grid();
      if (dg.n_y() != grid_.n_y() || dg.n_z() != grid_.n_z() ||
          std::abs(dg.extent_y() / grid_.extent_y() - 1.0) > 1e-12 ||
          std::abs(dg.extent_z() / grid_.extent_z() - 1.0) > 1e-12) {
        throw InvalidArgument("condensate.ground_state_file: grid differs from the configured grid");
      }
      const auto v = dump.field.values();
      dump.field = TransverseField(grid_, std::vector<Complex>(v.begin(), v.end()));
      if (std::abs(dump.length_unit_m / units_.length_unit_m() - 1.0) > 1e-9) {
        throw InvalidArgument("condensate.ground_state_file: written with different units");
      }
      dump.field.normalize();
      const auto parts = condensate::gp_energy(dump.field, trap_.sample(grid_), g2d_);
      const auto [ry, rz] = condensate::moment_radii(dump.field);
      ground_ = {std::move(dump.field), parts.chemical_potential(), ry, rz};
      log(1, "ground state read from " + file);
      return;
    }
    condensate::RelaxOptions opts;
    opts.tol = cfg_.condensate.relax_tolerance;
    opts.max_steps = std::size_t(cfg_.condensate.relax_max_steps);
    auto relaxed = condensate::relax_ground_state(condensate::thomas_fermi_profile(trap_, g2d_, grid_),
                                                  trap_, g2d_, opts);
    relax_steps_ = relaxed.steps;
    ground_ = std::move(relaxed.state);
    log(1, "ground state relaxed in " + std::to_string(relax_steps_) + " steps");
  }

  static std::pair<double, double> density_spread(const LadderState& state) {
    const auto& g = state.grid();
    double n = 0.0;
    double yy = 0.0;
    double zz = 0.0;
    for (const auto& comp : state.components()) {
      for (std::size_t iz = 0; iz < g.n_z(); ++iz) {
        for (std::size_t iy = 0; iy < g.n_y(); ++iy) {
          const double d = std::norm(comp(iy, iz));
          n += d;
          yy += d * g.y(iy) * g.y(iy);
          zz += d * g.z(iz) * g.z(iz);
        }
      }
    }
    return {std::sqrt(yy / n), std::sqrt(zz / n)};
  }

  /// Bilinear |f| on the trap grid, zero outside it.
  double sample_abs(std::span<const Complex> f, double y, double z) const {
    const double fy = grid_.fy(y);
    const double fz = grid_.fz(z);
    if (fy < 0.0 || fz < 0.0 || fy >= double(grid_.n_y() - 1) || fz >= double(grid_.n_z() - 1)) {
      return 0.0;
    }
    const auto iy = std::size_t(fy);
    const auto iz = std::size_t(fz);
    const double ty = fy - double(iy);
    const double tz = fz - double(iz);
    auto at = [&](std::size_t a, std::size_t b) { return std::abs(f[grid_.index(a, b)]); };
    return (1 - ty) * (1 - tz) * at(iy, iz) + ty * (1 - tz) * at(iy + 1, iz) +
           (1 - ty) * tz * at(iy, iz + 1) + ty * tz * at(iy + 1, iz + 1);
  }

  ExperimentConfig cfg_;
  Logger logger_;
  UnitSystem units_;
  Grid2D grid_;
  condensate::TrapSpec trap_;
  double g2d_ = 0.0;
  condensate::GroundState ground_;
  std::size_t relax_steps_ = 0;
};

struct ScenarioResult {
  Summary summary;
  std::vector<dynamics::PulseLogEntry> log;
  std::optional<diagnostics::StudyResult> study;
  std::filesystem::path output_dir;
};

namespace detail {

class Bundle {
 public:
  Bundle(const Experiment& exp, std::filesystem::path dir, bool enabled)
      : exp_(exp), dir_(std::move(dir)), enabled_(enabled) {
    if (!enabled_) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  bool enabled() const { return enabled_; }
  const std::filesystem::path& dir() const { return dir_; }

  void image(const std::string& name, const ImagePlane& img, io::Metadata extra = {}) const {
    if (!enabled_) return;
    io::write_pgm16(dir_ / (name + ".pgm"), img, exp_.units(), extra);
  }

  void field(const std::string& name, const TransverseField& f, int order) const {
    if (!enabled_) return;
    io::write_field_dump(dir_ / name, f, exp_.units(), order);
  }

  void state(const std::string& prefix, const LadderState& s) const {
    for (int n = s.n_lo(); n <= s.n_hi(); ++n) field(prefix + "_n" + std::to_string(n), s.component(n), n);
  }

 private:
  const Experiment& exp_;
  std::filesystem::path dir_;
  bool enabled_;
};

inline std::set<int> order_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

inline void add_populations(Summary& s, const std::string& prefix, const Populations& p) {
  for (int n = p.n_lo; n <= p.n_hi(); ++n) s.add(prefix + "P_" + std::to_string(n), p.at(n));
}

inline void add_pulses(Summary& s, const Experiment& exp, const SequenceRun& run) {
  for (std::size_t i = 0; i < run.pulses.size(); ++i) {
    const std::string k = "pulse" + std::to_string(i) + ".";
    s.add(k + "peak_rate_rad_per_s", exp.units().rate_to_si(run.pulses[i].spec.coupling.peak_rate));
    if (run.pulses[i].calibration_evaluations > 0) {
      s.add(k + "calibration_population", run.pulses[i].calibration_population);
      s.add(k + "calibration_scan_max", run.pulses[i].calibration_scan_max);
      s.add(k + "calibration_evaluations", run.pulses[i].calibration_evaluations);
    }
    add_populations(s, k, run.log[i].populations);
  }
}

inline void add_vortex(Summary& s, const std::string& prefix, const Experiment& exp,
                       const diagnostics::VortexReport& r) {
  s.add(prefix + "winding", r.winding);
  s.add(prefix + "lz_per_hbar", r.l_z_expect);
  s.add(prefix + "core_y_m", exp.units().length_to_si(r.core_y));
  s.add(prefix + "core_z_m", exp.units().length_to_si(r.core_z));
  s.add(prefix + "winding_residual", r.confidence);
}

inline const PulseConfig* first_lg_pulse(const ExperimentConfig& cfg) {
  for (const auto& p : cfg.sequence) {
    const auto& a = cfg.beams.at(p.beam_a);
    const auto& b = cfg.beams.at(p.beam_b);
    if (a.kind == "lg" || b.kind == "lg") return &p;
  }
  return nullptr;
}

inline std::size_t snapshot_index(const SnapshotConfig& snap, std::size_t pulses) {
  return snap.after_pulse < 0 ? pulses : std::size_t(snap.after_pulse);
}

}  // namespace detail

/// Runs the configured scenario and writes its artifact bundle.
inline ScenarioResult run_scenario(const ExperimentConfig& cfg, const RunOptions& options = {}) {
  auto logger = [&](int level, const std::string& msg) {
    if (options.log && level <= options.verbosity) *options.log << msg << '\n';
  };
  const Experiment exp(cfg, logger);
  const auto& units = exp.units();
  const std::filesystem::path out_dir = cfg.output_dir;
  const detail::Bundle bundle(exp, out_dir, options.write_outputs);
  const std::size_t threads =
      options.threads > 0 ? options.threads : std::size_t(std::max(1, cfg.study.threads));

  ScenarioResult result;
  result.output_dir = out_dir;
  auto& s = result.summary;
  s.add_text("scenario", cfg.scenario);
  s.add("schema_version", cfg.version);
  s.add("recoil_frequency_hz", units.recoil_frequency_hz());
  s.add("g2d_j_m2", units.coupling2d_to_si(exp.g2d()));
  s.add("chemical_potential_hz", units.frequency_to_si(exp.ground().chemical_potential) /
                                     (2.0 * std::numbers::pi));
  s.add("tf_radius_y_m", units.length_to_si(exp.ground().radius_y));
  s.add("tf_radius_z_m", units.length_to_si(exp.ground().radius_z));
  bundle.field("ground_state", exp.ground().field, 0);

  const auto initial = exp.initial_state();
  const auto run = exp.run(initial);
  result.log = run.log;
  detail::add_pulses(s, exp, run);
  detail::add_populations(s, "final.", field_norm(run.states.back()));
  if (bundle.enabled()) {
    dynamics::write_population_log(bundle.dir() / "population_log.tsv", run.log, units);
    bundle.state("final", run.states.back());
  }

  // Time of flight is shared between snapshots taken after the same pulse.
  std::map<std::size_t, LadderState> expanded;
  auto expanded_after = [&](std::size_t k) -> const LadderState& {
    auto it = expanded.find(k);
    if (it == expanded.end()) it = expanded.emplace(k, exp.expand(run.states.at(k))).first;
    return it->second;
  };
  std::map<std::string, ImagePlane> analysis_images;
  for (std::size_t i = 0; i < cfg.imaging.snapshots.size(); ++i) {
    const auto& snap = cfg.imaging.snapshots[i];
    const std::size_t k = detail::snapshot_index(snap, run.pulses.size());
    const auto& tof = expanded_after(k);
    const auto select = detail::order_set(snap.orders);
    auto img = imaging::absorption_image(tof, select, exp.imaging_options(i, true));
    if (cfg.imaging.pitch_m > 0.0) {
      bundle.image(snap.name, imaging::absorption_image(tof, select, exp.imaging_options(i, false)));
    } else {
      bundle.image(snap.name, img);
    }
    analysis_images.emplace(snap.name, std::move(img));
    logger(1, "image " + snap.name + " written");
  }
  auto first_image_of = [&](std::size_t k, int order) -> std::optional<ImagePlane> {
    for (const auto& snap : cfg.imaging.snapshots) {
      if (detail::snapshot_index(snap, run.pulses.size()) == k && snap.orders.size() == 1 &&
          snap.orders.front() == order) {
        return analysis_images.at(snap.name);
      }
    }
    return std::nullopt;
  };
  auto image_of = [&](std::size_t k, int order) {
    if (auto img = first_image_of(k, order)) return *img;
    return imaging::absorption_image(expanded_after(k), {order}, exp.imaging_options(99, true));
  };

  const double loop = units.length_to_internal(cfg.analysis.loop_radius_m);
  const diagnostics::Annulus annulus{units.length_to_internal(cfg.analysis.annulus_inner_m),
                                     units.length_to_internal(cfg.analysis.annulus_outer_m)};
  const PulseConfig* lg_pulse = detail::first_lg_pulse(cfg);
  const std::size_t last = run.pulses.size();

  if (cfg.scenario == "single_vortex") {
    const auto& final = run.states.back();
    const int target = cfg.sequence.front().rabi.target_order;
    detail::add_vortex(s, "vortex.", exp, diagnostics::vortex_report(final.component(target), loop));
    s.add("transfer_population", field_norm(final).at(target));
    const auto img = image_of(last, target);
    s.add("image_center_to_peak", img.sample(0.0, 0.0) / std::max(img.max_value(), 1e-300));
    if (bundle.enabled() && lg_pulse) {
      const auto vol = optics::corkscrew_potential(exp.beam(lg_pulse->beam_a), exp.beam(lg_pulse->beam_b),
                                                   lg_pulse->delta_nu_in_nu_r, 0.0, 16, exp.grid());
      optics::write_corkscrew(bundle.dir(), "corkscrew", vol, units);
    }
  } else if (cfg.scenario == "counter_rotating") {
    const int order = cfg.analysis.compare_order;
    const auto img = image_of(last, order);
    if (!lg_pulse) throw InvalidArgument("counter_rotating needs an LG pulse");
    const auto env = exp.envelopes(run.states.back(), expanded_after(last), exp.coupling_shape(*lg_pulse));
    const auto equal = fit_pattern(imaging::PatternKind::CounterRotating, env.e1, env.e1, img, env.grid, false);
    const auto free = fit_pattern(imaging::PatternKind::CounterRotating, env.e1, env.e1, img, env.grid, true);
    s.add("compare_order", order);
    s.add("correlation_equal_weights", equal.correlation);
    s.add("orientation_equal_weights_rad", equal.theta);
    s.add("correlation_fitted_weights", free.correlation);
    s.add("fitted_weight", free.weight);
    bundle.image("counter_rotating_analytic", equal.pattern, {{"theta_rad", io::format_double(equal.theta)}});
    const auto pops = field_norm(run.states.back());
    s.add("imbalance_pm1", (pops.at(1) - pops.at(-1)) / (pops.at(1) + pops.at(-1)));
  } else if (cfg.scenario == "phase_coherence") {
    const int order = cfg.study.image_order;
    const std::size_t phase_pulse = std::size_t(cfg.study.phase_pulse);
    std::vector<double> phases = cfg.study.phases_rad;
    if (phases.empty()) {
      for (int i = 0; i < cfg.study.trials; ++i) {
        phases.push_back(2.0 * std::numbers::pi * i / double(cfg.study.trials));
      }
    }
    const auto lg_beam = exp.beam(cfg.study.readout_lg_beam);
    const auto g_beam = exp.beam(cfg.study.readout_g_beam);
    const auto hole_of = [&](const ImagePlane& img, const LadderState& expanded) {
      if (!cfg.analysis.hole_envelope_divide || !lg_pulse) {
        return diagnostics::hole_angle(img, annulus, 0.0, 0.0, cfg.analysis.min_contrast, cfg.analysis.hole_focus);
      }
      const auto env = exp.envelopes(run.states.back(), expanded, exp.coupling_shape(*lg_pulse));
      auto density = ImagePlane::on_grid(env.grid, "envelope");
      for (std::size_t i = 0; i < env.e0.size(); ++i) density.pixels[i] = env.e0[i] * env.e0[i];
      return diagnostics::hole_angle(diagnostics::divide_by_envelope(img, density), annulus, 0.0, 0.0,
                                     cfg.analysis.min_contrast, cfg.analysis.hole_focus);
    };
    const auto trial = [&](double theta) {
      auto state = initial;
      for (std::size_t i = 0; i < run.pulses.size(); ++i) {
        auto pulse = run.pulses[i];
        if (i == phase_pulse) pulse.spec.coupling = pulse.spec.coupling.phase_shifted(theta);
        state = exp.apply(pulse, state);
      }
      const auto expanded = exp.expand(state);
      const auto img = imaging::absorption_image(expanded, {order}, exp.imaging_options(0, true));
      diagnostics::TrialOutcome out;
      out.hole_angle = hole_of(img, expanded);
      out.readout_angle = optics::phase_readout_pattern(lg_beam, g_beam, theta, exp.grid()).angle;
      return out;
    };
    auto study = diagnostics::phase_correlation_study(phases, trial, threads);
    s.add("study.trials", phases.size());
    s.add("study.slope", study.fit.slope);
    s.add("study.intercept_rad", study.fit.intercept);
    s.add("study.max_abs_residual_rad", study.fit.max_abs_residual);
    std::vector<double> readout;
    std::vector<double> holes;
    for (const auto& row : study.rows) {
      readout.push_back(row.readout_angle);
      holes.push_back(row.hole_angle);
    }
    const auto vs_readout = diagnostics::fit_circular_slope(readout, holes);
    s.add("study.slope_vs_readout", vs_readout.slope);
    // Nominal run (phase as configured) gives the bundle images.
    const auto img = image_of(last, order);
    const double hole = hole_of(img, expanded_after(last));
    s.add("hole_angle_rad", hole);
    if (lg_pulse) {
      const auto env = exp.envelopes(run.states.back(), expanded_after(last), exp.coupling_shape(*lg_pulse));
      const auto fit = fit_pattern(imaging::PatternKind::RotatingVsNonRotating, env.e0, env.e1, img,
                                   env.grid, true);
      s.add("analytic.correlation", fit.correlation);
      s.add("analytic.theta_rad", fit.theta);
      s.add("analytic.hole_angle_rad", wrap_two_pi(std::numbers::pi - fit.theta));
      bundle.image("hole_analytic", fit.pattern, {{"theta_rad", io::format_double(fit.theta)}});
    }
    const auto nominal = optics::phase_readout_pattern(lg_beam, g_beam, 0.0, exp.grid());
    s.add("readout_angle_rad", nominal.angle);
    bundle.image("readout_pattern", nominal.pattern);
    if (bundle.enabled()) diagnostics::write_study_table(bundle.dir() / "phase_study.tsv", study.rows);
    result.study = std::move(study);
  } else if (cfg.scenario == "double_charge") {
    const std::size_t after_transfer = std::min<std::size_t>(2, last);
    const auto& doubled = run.states.at(after_transfer);
    detail::add_vortex(s, "vortex2.", exp, diagnostics::vortex_report(doubled.component(2), loop));
    if (after_transfer >= 2) {
      s.add("second_step_ratio", run.log[1].populations.at(2) / run.log[0].populations.at(1));
    }
    const auto img = image_of(last, 2);
    const auto minima = diagnostics::angular_minima(img, annulus, 2);
    if (minima.size() == 2) {
      s.add("minima_angle_a_rad", minima[0]);
      s.add("minima_angle_b_rad", minima[1]);
      s.add("minima_separation_rad", std::abs(wrap_pi(minima[0] - minima[1])));
    }
    if (lg_pulse) {
      const auto env = exp.envelopes(run.states.back(), expanded_after(last), exp.coupling_shape(*lg_pulse));
      const auto fit = fit_pattern(imaging::PatternKind::DoublyVsNonRotating, env.e0, env.e2, img,
                                   env.grid, true);
      s.add("analytic.correlation", fit.correlation);
      s.add("analytic.theta_rad", fit.theta);
      s.add("analytic.weight", fit.weight);
      bundle.image("doubly_analytic", fit.pattern, {{"theta_rad", io::format_double(fit.theta)}});
    }
  } else if (cfg.scenario == "resonance_sweep") {
    const auto& rc = cfg.resonance;
    const std::size_t k = std::size_t(rc.pulse);
    const auto& before = run.states.at(k);
    std::vector<double> detunings(std::size_t(rc.points));
    for (int i = 0; i < rc.points; ++i) {
      detunings[std::size_t(i)] = rc.delta_nu_min_in_nu_r +
                                  (rc.delta_nu_max_in_nu_r - rc.delta_nu_min_in_nu_r) * i / double(rc.points - 1);
    }
    std::vector<double> transfer(detunings.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(detunings.size());
    auto worker = [&] {
      for (std::size_t i = next++; i < detunings.size(); i = next++) {
        try {
          auto spec = run.pulses[k].spec;
          spec.delta_nu = detunings[i];
          const auto out = dynamics::evolve_pulse(before, spec, exp.trap(), exp.g2d(), exp.evolve_options());
          transfer[i] = field_norm(out).at(rc.target_order);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < std::min(threads, detunings.size()); ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    const auto best = std::size_t(std::max_element(transfer.begin(), transfer.end()) - transfer.begin());
    double peak = detunings[best];
    if (best > 0 && best + 1 < detunings.size()) {
      const double a = transfer[best - 1];
      const double b = transfer[best];
      const double c = transfer[best + 1];
      const double denom = a - 2.0 * b + c;
      if (denom < 0.0) peak += 0.5 * (a - c) / denom * (detunings[1] - detunings[0]);
    }
    const double duration_s = cfg.sequence[k].duration_s;
    s.add("resonance.points", detunings.size());
    s.add("resonance.peak_delta_nu_in_nu_r", peak);
    s.add("resonance.peak_transfer", transfer[best]);
    s.add("resonance.fourier_width_in_nu_r", 1.0 / (duration_s * units.recoil_frequency_hz()));
    if (bundle.enabled()) {
      std::ofstream out(bundle.dir() / "resonance.tsv");
      if (!out) throw IoError("cannot write resonance.tsv");
      out << "delta_nu_over_nu_r\tdelta_nu_hz\tP_" << rc.target_order << '\n' << std::setprecision(12);
      for (std::size_t i = 0; i < detunings.size(); ++i) {
        out << detunings[i] << '\t' << units.frequency_to_si(detunings[i]) << '\t' << transfer[i] << '\n';
      }
      if (!out) throw IoError("write failed: resonance.tsv");
    }
  }

  if (bundle.enabled()) {
    const auto path = bundle.dir() / "summary.tsv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "key\tvalue\n";
    for (const auto& [k, v] : s.entries()) out << k << '\t' << v << '\n';
    if (!out) throw IoError("write failed: " + path.string());
    io::write_sidecar(bundle.dir() / "summary.tsv.meta",
                      {{"schema_version", std::to_string(cfg.version)},
                       {"scenario", cfg.scenario},
                       {"length_unit", "m"},
                       {"rate_unit", "rad/s"},
                       {"detuning_unit", "recoil frequency multiples"}});
    std::ofstream echo(bundle.dir() / "config.json");
    echo << to_json(cfg).dump(2) << '\n';
    if (!echo) throw IoError("cannot write the config echo");
  }
  return result;
}

}  // namespace oamsim::scenarios
