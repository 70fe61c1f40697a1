// units.hpp: internal unit system and the fixed conversion constants

#pragma once

#include <numbers>

namespace exdyn::units {

// Internal units: energy and rates in cm^-1, time in fs, dipole in e*a0,
// field in GV/m. Angular frequency (rad/fs) of a wavenumber is 2*pi*c*nu.
inline constexpr double speed_of_light_cm_per_fs = 2.99792458e-5;
inline constexpr double rad_per_fs_per_wavenumber =
    2.0 * std::numbers::pi * speed_of_light_cm_per_fs;

inline constexpr double wavenumber_per_ev = 8065.544;

// (e*a0) * (GV/m) expressed as an interaction energy in cm^-1.
inline constexpr double wavenumber_per_dipole_field = 426.8;

// k_B in cm^-1 / K (k_B * 300 K = 208.51 cm^-1).
inline constexpr double boltzmann_wavenumber_per_kelvin = 208.51 / 300.0;

// Atomic units used only to convert the OCT intensity budget.
inline constexpr double gv_per_m_per_au_field = 514.22;
inline constexpr double fs_per_au_time = 0.0241888433;

inline constexpr double ev_to_wavenumber(double ev) { return ev * wavenumber_per_ev; }
inline constexpr double wavenumber_to_ev(double cm1) { return cm1 / wavenumber_per_ev; }

// rad/fs of a photon energy given in eV.
inline constexpr double ev_to_rad_per_fs(double ev) {
    return ev * wavenumber_per_ev * rad_per_fs_per_wavenumber;
}
inline constexpr double rad_per_fs_to_ev(double w) {
    return w / (wavenumber_per_ev * rad_per_fs_per_wavenumber);
}

// Inverse temperature in cm (i.e. 1 / (k_B T) with k_B T in cm^-1).
inline constexpr double beta_of(double kelvin) {
    return 1.0 / (boltzmann_wavenumber_per_kelvin * kelvin);
}

// Intensity integral int E^2 dt: atomic units -> (GV/m)^2 fs.
inline constexpr double au_intensity_to_internal(double au) {
    return au * gv_per_m_per_au_field * gv_per_m_per_au_field * fs_per_au_time;
}

}  // namespace exdyn::units
