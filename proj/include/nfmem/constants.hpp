#pragma once

#include <limits>
#include <numbers>

namespace nfmem::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018
inline constexpr double speed_of_light = 299792458.0;        // m/s
inline constexpr double planck = 6.62607015e-34;             // J s
inline constexpr double boltzmann = 1.380649e-23;            // J/K
inline constexpr double bohr_magneton = 9.2740100783e-24;    // J/T
inline constexpr double vacuum_permeability = 1.25663706212e-6;
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg

//
// Cesium D2 line
//
inline constexpr double cs_mass_kg = 132.905451961 * atomic_mass_unit;
inline constexpr double cs_d2_wavelength_m = 852.347e-9;
inline constexpr double cs_hyperfine_splitting_hz = 9.192631770e9;
inline constexpr double cs_natural_linewidth = two_pi * 5.2e6;    // rad/s, free space
inline constexpr double cs_fitted_linewidth = two_pi * 6.8e6;     // rad/s, near the fiber
inline constexpr double cs_d2_saturation_intensity = 11.049;      // W/m^2 (1.1049 mW/cm^2)
inline constexpr double cs_saturated_scattered_power_w = 3.8e-12;
inline constexpr double cs_clock_g_factor = 0.25;  // |g_F| for F=3 and F=4, opposite signs
// Ground-state Cs near fused silica, C3/h ~ 1.16 kHz um^3.
inline constexpr double cs_silica_c3_jm3 = planck * 1.16e3 * 1e-18;

// Fused silica at 852 nm (Sellmeier).
inline constexpr double silica_index_852 = 1.4525;

inline constexpr double infinity = std::numeric_limits<double>::infinity();

}  // namespace nfmem::constants
