#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oamsim/core/error.hpp"
#include "oamsim/core/units.hpp"

namespace oamsim::scenarios {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

inline const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids{"single_vortex", "counter_rotating", "phase_coherence",
                                            "double_charge", "resonance_sweep",  "custom"};
  return ids;
}

struct BeamConfig {
  std::string kind = "gaussian";  // "lg" or "gaussian"
  int charge = 0;
  double waist_m = 175e-6;
  double power_w = 0.0;
  double center_y_m = 0.0;
  double center_z_m = 0.0;
  double phase_rad = 0.0;
};

struct RabiConfig {
  std::string mode = "pi";  // pi | fraction | balance | fixed
  int source_order = 0;
  int target_order = 1;
  double fraction = 0.5;
  double peak_rate_rad_per_s = 0.0;
};

struct PulseConfig {
  std::string label;
  std::string beam_a = "lg";  // absorbed beam; the coupling carries beam_a * conj(beam_b)
  std::string beam_b = "g";
  double delta_nu_in_nu_r = 4.0;
  double duration_s = 130e-6;
  double rel_phase_rad = 0.0;
  bool trap_on = true;
  double delay_after_s = 0.0;
  RabiConfig rabi;
};

struct SnapshotConfig {
  std::string name;
  int after_pulse = -1;  // number of pulses applied; -1 means the whole sequence
  std::vector<int> orders{1};
};

struct ImagingConfig {
  double tof_s = 6e-3;
  double meanfield_window_s = 5e-4;
  int pad_factor = 2;
  double pitch_m = 0.0;  // 0: grid pitch
  double blur_sigma_m = 0.0;
  double noise_level = 0.0;
  std::vector<SnapshotConfig> snapshots;
};

struct GridConfig {
  int points_y = 256;
  int points_z = 256;
  double extent_y_m = 160e-6;
  double extent_z_m = 160e-6;
};

struct CondensateConfig {
  double tf_radius_y_m = 30e-6;
  double g2d_j_m2 = 0.0;  // 0: calibrate from tf_radius_y_m
  std::string ground_state_file;
  double relax_tolerance = 1e-10;
  int relax_max_steps = 200000;
};

struct NumericsConfig {
  int n_max = 3;
  double dt_s = 0.0;  // 0: automatic
  double max_phase_step_rad = 0.1;
  double edge_guard = 1e-3;
  double norm_tolerance = 1e-9;
  double pi_scan_lo_factor = 0.25;
  double pi_scan_hi_factor = 4.0;
  int pi_scan_points = 16;
  double pi_rate_tolerance = 1e-2;
  double fraction_tolerance = 1e-4;
};

struct AnalysisConfig {
  double loop_radius_m = 10e-6;
  double annulus_inner_m = 4e-6;
  double annulus_outer_m = 24e-6;
  double min_contrast = 0.2;
  double hole_focus = 0.3;           // fraction of the profile depth that weighs the hole azimuth
  bool hole_envelope_divide = true;  // divide hole images by the non-rotating cloud envelope
  int compare_order = -1;  // order compared against the analytic pattern
};

struct StudyConfig {
  int trials = 18;
  std::vector<double> phases_rad;  // overrides the uniform phase list when non-empty
  int phase_pulse = 0;
  int image_order = 1;
  std::string readout_lg_beam = "lg";
  std::string readout_g_beam = "g_co";
  int threads = 1;
};

struct ResonanceConfig {
  int pulse = 0;
  double delta_nu_min_in_nu_r = 2.0;
  double delta_nu_max_in_nu_r = 6.0;
  int points = 17;
  int target_order = 1;
};

/// LG beam and the counter- and co-propagating Gaussian beams of the experiment.
inline std::map<std::string, BeamConfig> default_beams() {
  return {{"lg", {"lg", 1, 85e-6, 1.5e-6, 0.0, 0.0, 0.0}},
          {"g", {"gaussian", 0, 175e-6, 18e-6, 0.0, 0.0, 0.0}},
          {"g_co", {"gaussian", 0, 200e-6, 8e-6, 0.0, 0.0, 0.0}}};
}

struct ExperimentConfig {
  int version = schema_version;
  std::string scenario = "custom";
  std::string output_dir = "out";
  unsigned long long seed = 1;
  PhysicalParams physical;
  GridConfig grid;
  CondensateConfig condensate;
  NumericsConfig numerics;
  std::map<std::string, BeamConfig> beams = default_beams();
  std::vector<PulseConfig> sequence;
  ImagingConfig imaging;
  AnalysisConfig analysis;
  StudyConfig study;
  ResonanceConfig resonance;
};

/// Raised with every schema problem found, one "path: message" per entry.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s;
    for (const auto& e : p) s += (s.empty() ? "" : "\n") + e;
    return s;
  }
  std::vector<std::string> problems_;
};

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string nearest_key(const std::string& key, const std::vector<std::string>& allowed) {
  std::string best;
  std::size_t dist = std::string::npos;
  for (const auto& k : allowed) {
    const std::size_t d = edit_distance(key, k);
    if (d < dist) {
      dist = d;
      best = k;
    }
  }
  return best;
}

namespace detail {

/// Walks one JSON object, reading known keys and collecting problems.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) error(path_, "expected an object");
  }

  ~ObjectReader() = default;

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void error(const std::string& where, const std::string& what) {
    errors_.push_back((where.empty() ? std::string("<root>") : where) + ": " + what);
  }

  const Json* find(const std::string& key) {
    allowed_.push_back(key);
    if (!obj_.is_object()) return nullptr;
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const Json* v = find(key)) {
      if (v->is_number() && std::isfinite(v->get<double>())) {
        out = v->get<double>();
      } else {
        error(at(key), "expected a finite number");
      }
    }
  }

  void integer(const std::string& key, int& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_integer()) {
        out = v->get<int>();
      } else {
        error(at(key), "expected an integer");
      }
    }
  }

  void unsigned_integer(const std::string& key, unsigned long long& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_unsigned()) {
        out = v->get<unsigned long long>();
      } else {
        error(at(key), "expected a non-negative integer");
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        error(at(key), "expected true or false");
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const Json* v = find(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        error(at(key), "expected a string");
      }
    }
  }

  template <class T>
  void list(const std::string& key, std::vector<T>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) {
        error(at(key), "expected an array");
        return;
      }
      std::vector<T> tmp;
      for (std::size_t i = 0; i < v->size(); ++i) {
        const Json& e = (*v)[i];
        const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
        if (!ok) {
          error(at(key) + "[" + std::to_string(i) + "]", "expected a number");
          continue;
        }
        tmp.push_back(e.get<T>());
      }
      out = std::move(tmp);
    }
  }

  /// Reports keys present in the object but never asked for.
  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(allowed_.begin(), allowed_.end(), key) == allowed_.end()) {
        error(at(key), "unknown key (did you mean \"" + nearest_key(key, allowed_) + "\"?)");
      }
    }
  }

  void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) error(at(key), what);
  }

 private:
  const Json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::vector<std::string> allowed_;
};

inline bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline void read_beam(const Json& j, const std::string& path, BeamConfig& b,
                      std::vector<std::string>& errors) {
  ObjectReader r(j, path, errors);
  r.string("kind", b.kind);
  r.integer("charge", b.charge);
  r.number("waist_m", b.waist_m);
  r.number("power_w", b.power_w);
  r.number("center_y_m", b.center_y_m);
  r.number("center_z_m", b.center_z_m);
  r.number("phase_rad", b.phase_rad);
  r.finish();
  r.require(b.kind == "lg" || b.kind == "gaussian", "kind", "must be \"lg\" or \"gaussian\"");
  r.require(b.kind != "gaussian" || b.charge == 0, "charge", "a gaussian beam has charge 0");
  r.require(b.kind != "lg" || (b.charge != 0 && std::abs(b.charge) <= 2), "charge",
            "LG charge must be in {-2, -1, 1, 2}");
  r.require(b.waist_m > 0.0, "waist_m", "must be positive");
  r.require(b.power_w >= 0.0, "power_w", "must be non-negative");
}

inline void read_pulse(const Json& j, const std::string& path, PulseConfig& p,
                       std::vector<std::string>& errors) {
  ObjectReader r(j, path, errors);
  r.string("label", p.label);
  r.string("beam_a", p.beam_a);
  r.string("beam_b", p.beam_b);
  r.number("delta_nu_in_nu_r", p.delta_nu_in_nu_r);
  r.number("duration_s", p.duration_s);
  r.number("rel_phase_rad", p.rel_phase_rad);
  r.boolean("trap_on", p.trap_on);
  r.number("delay_after_s", p.delay_after_s);
  if (const Json* rabi = r.find("rabi")) {
    ObjectReader q(*rabi, r.at("rabi"), errors);
    q.string("mode", p.rabi.mode);
    q.integer("source_order", p.rabi.source_order);
    q.integer("target_order", p.rabi.target_order);
    q.number("fraction", p.rabi.fraction);
    q.number("peak_rate_rad_per_s", p.rabi.peak_rate_rad_per_s);
    q.finish();
    const auto& m = p.rabi.mode;
    q.require(m == "pi" || m == "fraction" || m == "balance" || m == "fixed", "mode",
              "must be one of pi, fraction, balance, fixed");
    q.require(m != "fraction" || (p.rabi.fraction > 0.0 && p.rabi.fraction < 1.0), "fraction",
              "must lie in (0, 1)");
    q.require(m != "fixed" || p.rabi.peak_rate_rad_per_s > 0.0, "peak_rate_rad_per_s",
              "must be positive in fixed mode");
    q.require(p.rabi.source_order != p.rabi.target_order, "target_order",
              "must differ from source_order");
  }
  r.finish();
  r.require(p.duration_s > 0.0, "duration_s", "must be positive");
  r.require(p.delay_after_s >= 0.0, "delay_after_s", "must be non-negative");
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& root) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  detail::ObjectReader r(root, "", errors);

  r.integer("schema_version", c.version);
  r.require(c.version == schema_version, "schema_version",
            "unsupported version (expected " + std::to_string(schema_version) + ")");
  r.string("scenario", c.scenario);
  {
    const auto& ids = scenario_ids();
    if (std::find(ids.begin(), ids.end(), c.scenario) == ids.end()) {
      r.error("scenario", "unknown scenario \"" + c.scenario + "\" (did you mean \"" +
                              nearest_key(c.scenario, ids) + "\"?)");
    }
  }
  r.string("output_dir", c.output_dir);
  r.unsigned_integer("seed", c.seed);

  if (const Json* j = r.find("physical")) {
    detail::ObjectReader q(*j, "physical", errors);
    auto& p = c.physical;
    q.number("atomic_mass_kg", p.atomic_mass_kg);
    q.number("wavelength_m", p.wavelength_m);
    q.number("atom_number", p.atom_number);
    std::vector<double> freqs{p.trap_freqs_hz.begin(), p.trap_freqs_hz.end()};
    q.list("trap_freqs_hz", freqs);
    if (freqs.size() == 3) {
      std::copy(freqs.begin(), freqs.end(), p.trap_freqs_hz.begin());
    } else {
      q.error(q.at("trap_freqs_hz"), "expected three frequencies (x, y, z)");
    }
    q.number("raman_detuning_from_line_hz", p.raman_detuning_from_line_hz);
    q.finish();
    q.require(p.atomic_mass_kg > 0.0, "atomic_mass_kg", "must be positive");
    q.require(p.wavelength_m > 0.0, "wavelength_m", "must be positive");
    q.require(p.atom_number > 0.0, "atom_number", "must be positive");
    q.require(std::all_of(p.trap_freqs_hz.begin(), p.trap_freqs_hz.end(),
                          [](double f) { return f > 0.0; }),
              "trap_freqs_hz", "must be positive");
  }

  if (const Json* j = r.find("grid")) {
    detail::ObjectReader q(*j, "grid", errors);
    q.integer("points_y", c.grid.points_y);
    q.integer("points_z", c.grid.points_z);
    q.number("extent_y_m", c.grid.extent_y_m);
    q.number("extent_z_m", c.grid.extent_z_m);
    q.finish();
    q.require(detail::power_of_two(c.grid.points_y) && c.grid.points_y >= 8, "points_y",
              "must be a power of two >= 8");
    q.require(detail::power_of_two(c.grid.points_z) && c.grid.points_z >= 8, "points_z",
              "must be a power of two >= 8");
    q.require(c.grid.extent_y_m > 0.0, "extent_y_m", "must be positive");
    q.require(c.grid.extent_z_m > 0.0, "extent_z_m", "must be positive");
  }

  if (const Json* j = r.find("condensate")) {
    detail::ObjectReader q(*j, "condensate", errors);
    auto& s = c.condensate;
    q.number("tf_radius_y_m", s.tf_radius_y_m);
    q.number("g2d_j_m2", s.g2d_j_m2);
    q.string("ground_state_file", s.ground_state_file);
    q.number("relax_tolerance", s.relax_tolerance);
    q.integer("relax_max_steps", s.relax_max_steps);
    q.finish();
    q.require(s.tf_radius_y_m > 0.0, "tf_radius_y_m", "must be positive");
    q.require(s.g2d_j_m2 >= 0.0, "g2d_j_m2", "must be non-negative (0 calibrates)");
    q.require(s.relax_tolerance > 0.0, "relax_tolerance", "must be positive");
    q.require(s.relax_max_steps > 0, "relax_max_steps", "must be positive");
  }

  if (const Json* j = r.find("numerics")) {
    detail::ObjectReader q(*j, "numerics", errors);
    auto& n = c.numerics;
    q.integer("n_max", n.n_max);
    q.number("dt_s", n.dt_s);
    q.number("max_phase_step_rad", n.max_phase_step_rad);
    q.number("edge_guard", n.edge_guard);
    q.number("norm_tolerance", n.norm_tolerance);
    q.number("pi_scan_lo_factor", n.pi_scan_lo_factor);
    q.number("pi_scan_hi_factor", n.pi_scan_hi_factor);
    q.integer("pi_scan_points", n.pi_scan_points);
    q.number("pi_rate_tolerance", n.pi_rate_tolerance);
    q.number("fraction_tolerance", n.fraction_tolerance);
    q.finish();
    q.require(n.n_max >= 1 && n.n_max <= 6, "n_max", "must lie in [1, 6]");
    q.require(n.dt_s >= 0.0, "dt_s", "must be non-negative (0 selects automatically)");
    q.require(n.max_phase_step_rad > 0.0, "max_phase_step_rad", "must be positive");
    q.require(n.edge_guard > 0.0, "edge_guard", "must be positive");
    q.require(n.norm_tolerance > 0.0, "norm_tolerance", "must be positive");
    q.require(n.pi_scan_lo_factor > 0.0 && n.pi_scan_hi_factor > n.pi_scan_lo_factor,
              "pi_scan_hi_factor", "need 0 < pi_scan_lo_factor < pi_scan_hi_factor");
    q.require(n.pi_scan_points >= 3, "pi_scan_points", "must be at least 3");
    q.require(n.pi_rate_tolerance > 0.0, "pi_rate_tolerance", "must be positive");
    q.require(n.fraction_tolerance > 0.0, "fraction_tolerance", "must be positive");
  }

  if (const Json* j = r.find("beams")) {
    if (!j->is_object()) {
      r.error("beams", "expected an object mapping names to beams");
    } else {
      for (const auto& [name, beam] : j->items()) {
        BeamConfig b = c.beams.contains(name) ? c.beams[name] : BeamConfig{};
        detail::read_beam(beam, "beams." + name, b, errors);
        c.beams[name] = b;
      }
    }
  }

  if (const Json* j = r.find("sequence")) {
    if (!j->is_array()) {
      r.error("sequence", "expected an array of pulses");
    } else {
      for (std::size_t i = 0; i < j->size(); ++i) {
        PulseConfig p;
        const std::string path = "sequence[" + std::to_string(i) + "]";
        detail::read_pulse((*j)[i], path, p, errors);
        for (const auto* beam : {&p.beam_a, &p.beam_b}) {
          if (!c.beams.contains(*beam)) {
            errors.push_back(path + (beam == &p.beam_a ? ".beam_a" : ".beam_b") +
                             ": unknown beam \"" + *beam + "\"");
          }
        }
        const int lo = -c.numerics.n_max;
        const int hi = c.numerics.n_max;
        if (p.rabi.source_order < lo || p.rabi.source_order > hi || p.rabi.target_order < lo ||
            p.rabi.target_order > hi) {
          errors.push_back(path + ".rabi: orders must lie within [-n_max, n_max]");
        }
        c.sequence.push_back(p);
      }
    }
  }

  if (const Json* j = r.find("imaging")) {
    detail::ObjectReader q(*j, "imaging", errors);
    auto& m = c.imaging;
    q.number("tof_s", m.tof_s);
    q.number("meanfield_window_s", m.meanfield_window_s);
    q.integer("pad_factor", m.pad_factor);
    q.number("pitch_m", m.pitch_m);
    q.number("blur_sigma_m", m.blur_sigma_m);
    q.number("noise_level", m.noise_level);
    if (const Json* s = q.find("snapshots")) {
      if (!s->is_array()) {
        q.error("imaging.snapshots", "expected an array");
      } else {
        for (std::size_t i = 0; i < s->size(); ++i) {
          const std::string path = "imaging.snapshots[" + std::to_string(i) + "]";
          detail::ObjectReader sr((*s)[i], path, errors);
          SnapshotConfig snap;
          sr.string("name", snap.name);
          sr.integer("after_pulse", snap.after_pulse);
          sr.list("orders", snap.orders);
          sr.finish();
          sr.require(!snap.name.empty(), "name", "must be non-empty");
          sr.require(!snap.orders.empty(), "orders", "must select at least one order");
          sr.require(snap.after_pulse >= -1, "after_pulse", "must be -1 or a pulse count");
          sr.require(snap.after_pulse <= int(c.sequence.size()), "after_pulse",
                     "exceeds the number of pulses");
          m.snapshots.push_back(snap);
        }
      }
    }
    q.finish();
    q.require(m.tof_s >= 0.0, "tof_s", "must be non-negative");
    q.require(m.meanfield_window_s >= 0.0, "meanfield_window_s", "must be non-negative");
    q.require(detail::power_of_two(m.pad_factor), "pad_factor", "must be a power of two");
    q.require(m.pitch_m >= 0.0, "pitch_m", "must be non-negative (0 uses the grid pitch)");
    q.require(m.blur_sigma_m >= 0.0, "blur_sigma_m", "must be non-negative");
    q.require(m.noise_level >= 0.0, "noise_level", "must be non-negative");
  }

  if (const Json* j = r.find("analysis")) {
    detail::ObjectReader q(*j, "analysis", errors);
    auto& a = c.analysis;
    q.number("loop_radius_m", a.loop_radius_m);
    q.number("annulus_inner_m", a.annulus_inner_m);
    q.number("annulus_outer_m", a.annulus_outer_m);
    q.number("min_contrast", a.min_contrast);
    q.number("hole_focus", a.hole_focus);
    q.boolean("hole_envelope_divide", a.hole_envelope_divide);
    q.integer("compare_order", a.compare_order);
    q.finish();
    q.require(a.loop_radius_m > 0.0, "loop_radius_m", "must be positive");
    q.require(a.annulus_inner_m >= 0.0 && a.annulus_outer_m > a.annulus_inner_m,
              "annulus_outer_m", "need 0 <= annulus_inner_m < annulus_outer_m");
    q.require(a.min_contrast > 0.0, "min_contrast", "must be positive");
    q.require(a.hole_focus > 0.0 && a.hole_focus <= 1.0, "hole_focus", "must lie in (0, 1]");
  }

  if (const Json* j = r.find("study")) {
    detail::ObjectReader q(*j, "study", errors);
    auto& s = c.study;
    q.integer("trials", s.trials);
    q.list("phases_rad", s.phases_rad);
    q.integer("phase_pulse", s.phase_pulse);
    q.integer("image_order", s.image_order);
    q.string("readout_lg_beam", s.readout_lg_beam);
    q.string("readout_g_beam", s.readout_g_beam);
    q.integer("threads", s.threads);
    q.finish();
    q.require(s.phases_rad.empty() ? s.trials >= 3 : s.phases_rad.size() >= 3, "trials",
              "the study needs at least 3 trials");
    q.require(s.threads >= 1, "threads", "must be at least 1");
  }

  if (const Json* j = r.find("resonance")) {
    detail::ObjectReader q(*j, "resonance", errors);
    auto& s = c.resonance;
    q.integer("pulse", s.pulse);
    q.number("delta_nu_min_in_nu_r", s.delta_nu_min_in_nu_r);
    q.number("delta_nu_max_in_nu_r", s.delta_nu_max_in_nu_r);
    q.integer("points", s.points);
    q.integer("target_order", s.target_order);
    q.finish();
    q.require(s.delta_nu_max_in_nu_r > s.delta_nu_min_in_nu_r, "delta_nu_max_in_nu_r",
              "must exceed delta_nu_min_in_nu_r");
    q.require(s.points >= 2, "points", "must be at least 2");
  }

  r.finish();
  if (c.scenario != "custom" && c.sequence.empty()) {
    errors.push_back("sequence: scenario \"" + c.scenario + "\" needs at least one pulse");
  }
  const int pulses = int(c.sequence.size());
  if (c.scenario == "phase_coherence") {
    if (c.study.phase_pulse < 0 || c.study.phase_pulse >= pulses) {
      errors.push_back("study.phase_pulse: must index a pulse of the sequence");
    }
    for (const auto& [key, name] : {std::pair{"readout_lg_beam", c.study.readout_lg_beam},
                                    std::pair{"readout_g_beam", c.study.readout_g_beam}}) {
      if (!c.beams.contains(name)) {
        errors.push_back(std::string("study.") + key + ": unknown beam \"" + name + "\"");
      }
    }
  }
  if (c.scenario == "resonance_sweep" && (c.resonance.pulse < 0 || c.resonance.pulse >= pulses)) {
    errors.push_back("resonance.pulse: must index a pulse of the sequence");
  }
  if (!errors.empty()) throw SchemaError(std::move(errors));
  return c;
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = c.version;
  j["scenario"] = c.scenario;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  const auto& p = c.physical;
  j["physical"] = {{"atomic_mass_kg", p.atomic_mass_kg},
                   {"wavelength_m", p.wavelength_m},
                   {"atom_number", p.atom_number},
                   {"trap_freqs_hz", p.trap_freqs_hz},
                   {"raman_detuning_from_line_hz", p.raman_detuning_from_line_hz}};
  j["grid"] = {{"points_y", c.grid.points_y},
               {"points_z", c.grid.points_z},
               {"extent_y_m", c.grid.extent_y_m},
               {"extent_z_m", c.grid.extent_z_m}};
  const auto& s = c.condensate;
  j["condensate"] = {{"tf_radius_y_m", s.tf_radius_y_m},
                     {"g2d_j_m2", s.g2d_j_m2},
                     {"ground_state_file", s.ground_state_file},
                     {"relax_tolerance", s.relax_tolerance},
                     {"relax_max_steps", s.relax_max_steps}};
  const auto& n = c.numerics;
  j["numerics"] = {{"n_max", n.n_max},
                   {"dt_s", n.dt_s},
                   {"max_phase_step_rad", n.max_phase_step_rad},
                   {"edge_guard", n.edge_guard},
                   {"norm_tolerance", n.norm_tolerance},
                   {"pi_scan_lo_factor", n.pi_scan_lo_factor},
                   {"pi_scan_hi_factor", n.pi_scan_hi_factor},
                   {"pi_scan_points", n.pi_scan_points},
                   {"pi_rate_tolerance", n.pi_rate_tolerance},
                   {"fraction_tolerance", n.fraction_tolerance}};
  j["beams"] = Json::object();
  for (const auto& [name, b] : c.beams) {
    j["beams"][name] = {{"kind", b.kind},           {"charge", b.charge},
                        {"waist_m", b.waist_m},     {"power_w", b.power_w},
                        {"center_y_m", b.center_y_m}, {"center_z_m", b.center_z_m},
                        {"phase_rad", b.phase_rad}};
  }
  j["sequence"] = Json::array();
  for (const auto& q : c.sequence) {
    j["sequence"].push_back({{"label", q.label},
                             {"beam_a", q.beam_a},
                             {"beam_b", q.beam_b},
                             {"delta_nu_in_nu_r", q.delta_nu_in_nu_r},
                             {"duration_s", q.duration_s},
                             {"rel_phase_rad", q.rel_phase_rad},
                             {"trap_on", q.trap_on},
                             {"delay_after_s", q.delay_after_s},
                             {"rabi",
                              {{"mode", q.rabi.mode},
                               {"source_order", q.rabi.source_order},
                               {"target_order", q.rabi.target_order},
                               {"fraction", q.rabi.fraction},
                               {"peak_rate_rad_per_s", q.rabi.peak_rate_rad_per_s}}}});
  }
  const auto& m = c.imaging;
  j["imaging"] = {{"tof_s", m.tof_s},
                  {"meanfield_window_s", m.meanfield_window_s},
                  {"pad_factor", m.pad_factor},
                  {"pitch_m", m.pitch_m},
                  {"blur_sigma_m", m.blur_sigma_m},
                  {"noise_level", m.noise_level},
                  {"snapshots", Json::array()}};
  for (const auto& snap : m.snapshots) {
    j["imaging"]["snapshots"].push_back(
        {{"name", snap.name}, {"after_pulse", snap.after_pulse}, {"orders", snap.orders}});
  }
  const auto& a = c.analysis;
  j["analysis"] = {{"loop_radius_m", a.loop_radius_m},
                   {"annulus_inner_m", a.annulus_inner_m},
                   {"annulus_outer_m", a.annulus_outer_m},
                   {"min_contrast", a.min_contrast},
                   {"hole_focus", a.hole_focus},
                   {"hole_envelope_divide", a.hole_envelope_divide},
                   {"compare_order", a.compare_order}};
  const auto& st = c.study;
  j["study"] = {{"trials", st.trials},
                {"phases_rad", st.phases_rad},
                {"phase_pulse", st.phase_pulse},
                {"image_order", st.image_order},
                {"readout_lg_beam", st.readout_lg_beam},
                {"readout_g_beam", st.readout_g_beam},
                {"threads", st.threads}};
  const auto& rs = c.resonance;
  j["resonance"] = {{"pulse", rs.pulse},
                    {"delta_nu_min_in_nu_r", rs.delta_nu_min_in_nu_r},
                    {"delta_nu_max_in_nu_r", rs.delta_nu_max_in_nu_r},
                    {"points", rs.points},
                    {"target_order", rs.target_order}};
  return j;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw SchemaError({path.string() + ": " + e.what()});
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path));
}

/// Sets a value addressed by a dotted path such as "sequence.0.duration_s".
inline void set_by_path(Json& root, const std::string& dotted, const Json& value) {
  std::string pointer;
  std::stringstream ss(dotted);
  for (std::string part; std::getline(ss, part, '.');) pointer += "/" + part;
  try {
    root[Json::json_pointer(pointer)] = value;
  } catch (const Json::exception& e) {
    throw SchemaError({dotted + ": " + e.what()});
  }
}

}  // namespace oamsim::scenarios
