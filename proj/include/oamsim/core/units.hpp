#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "oamsim/core/error.hpp"

namespace oamsim {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double planck = 2.0 * std::numbers::pi * hbar;
inline constexpr double sodium_mass_kg = 3.8175e-26;
inline constexpr double sodium_d2_wavelength_m = 589.0e-9;
}  // namespace constants

struct PhysicalParams {
  double atomic_mass_kg = constants::sodium_mass_kg;
  double wavelength_m = constants::sodium_d2_wavelength_m;
  double atom_number = 1.5e6;
  // Effective 2D coupling in J m^2; zero means "calibrate from the condensate radii".
  double s_wave_coupling = 0.0;
  std::array<double, 3> trap_freqs_hz{20.0, 20.0 * std::numbers::sqrt2, 40.0};
  double raman_detuning_from_line_hz = -1.5e9;

  void validate() const {
    if (!(atomic_mass_kg > 0.0)) throw InvalidArgument("atomic_mass must be positive");
    if (!(wavelength_m > 0.0)) throw InvalidArgument("wavelength must be positive");
    if (!(atom_number > 0.0)) throw InvalidArgument("atom_number must be positive");
    for (double f : trap_freqs_hz) {
      if (!(f >= 0.0)) throw InvalidArgument("trap frequencies must be non-negative");
    }
  }
};

/// Recoil unit system: hbar = 1, E_r = 1, length 1/k.
///
/// In these units the atomic mass is 1/2, the transverse kinetic energy of a
/// plane wave with wavenumber q is q^2, and an angular frequency omega maps to
/// omega / omega_r.  A frequency in Hz expressed as a multiple of the recoil
/// frequency nu_r is the same number as the corresponding internal angular rate.
class UnitSystem {
 public:
  explicit UnitSystem(const PhysicalParams& params) {
    if (!(params.atomic_mass_kg > 0.0)) throw InvalidArgument("atomic_mass must be positive");
    if (!(params.wavelength_m > 0.0)) throw InvalidArgument("wavelength must be positive");
    mass_ = params.atomic_mass_kg;
    k_ = 2.0 * std::numbers::pi / params.wavelength_m;
    recoil_energy_ = (constants::hbar * k_) * (constants::hbar * k_) / (2.0 * mass_);
  }

  double wavenumber() const { return k_; }
  double mass_kg() const { return mass_; }
  double recoil_energy_j() const { return recoil_energy_; }
  double recoil_frequency_hz() const { return recoil_energy_ / constants::planck; }

  double length_unit_m() const { return 1.0 / k_; }
  double energy_unit_j() const { return recoil_energy_; }
  double time_unit_s() const { return constants::hbar / recoil_energy_; }

  double length_to_internal(double metres) const { return metres * k_; }
  double length_to_si(double internal) const { return internal / k_; }
  double time_to_internal(double seconds) const { return seconds / time_unit_s(); }
  double time_to_si(double internal) const { return internal * time_unit_s(); }
  double energy_to_internal(double joules) const { return joules / recoil_energy_; }
  double energy_to_si(double internal) const { return internal * recoil_energy_; }
  /// Angular rate (rad/s) to internal units.
  double rate_to_internal(double rad_per_s) const { return rad_per_s * time_unit_s(); }
  double rate_to_si(double internal) const { return internal / time_unit_s(); }
  /// Frequency in Hz to multiples of the recoil frequency.
  double frequency_to_recoil(double hz) const { return hz / recoil_frequency_hz(); }
  double frequency_to_si(double multiples) const { return multiples * recoil_frequency_hz(); }
  /// 2D coupling (J m^2) to internal units (E_r / k^2).
  double coupling2d_to_internal(double j_m2) const { return j_m2 * k_ * k_ / recoil_energy_; }
  double coupling2d_to_si(double internal) const { return internal * recoil_energy_ / (k_ * k_); }
  /// Field amplitude (internal, per internal length) to SI (per metre).
  double amplitude_to_si(double internal) const { return internal * k_; }

 private:
  double mass_ = 0.0;
  double k_ = 0.0;
  double recoil_energy_ = 0.0;
};

inline UnitSystem make_recoil_units(const PhysicalParams& params) { return UnitSystem(params); }

}  // namespace oamsim
