#pragma once

// Memory lifetime: transit loss, motional and Zeeman dephasing, their combination, and
// Larmor collapses/revivals under an applied field.
//
// Lifetimes that diverge (copropagating beams, no broadening) are returned as +infinity.

#include <utility>
#include <vector>

#include "nfmem/constants.hpp"

namespace nfmem::decoherence {

struct DecoherenceParams {
  double temperature_K = 200e-6;
  double atom_mass_kg = constants::cs_mass_kg;
  double fiber_radius_m = 200e-9;
  double wavelength_m = 852e-9;
  double control_angle_rad = 13.0 * constants::pi / 180.0;
  double zeeman_broadening_Hz = 100e3;
  /// Zero means "derive from the physical fields".
  double tau_T_s = 0.0;
  double tau_D_s = 0.0;

  void validate() const;
};

struct Lifetimes {
  double velocity_m_per_s = 0.0;
  double tau1_s = 0.0;  // transit
  double tau2_s = 0.0;  // motional dephasing
  double tau3_s = 0.0;  // Zeeman dephasing
  double tau_D_s = 0.0;
  double tau_T_s = 0.0;
};

/// Evaluates tau_1..3 and resolves tau_D, tau_T (supplied values win over derived ones).
Lifetimes resolve_lifetimes(const DecoherenceParams& p);

double thermal_velocity(double temperature_K, double mass_kg);
double transit_time(double radius_m, double velocity_m_per_s);
/// 1 / [(4 pi / lambda) sin(alpha/2) v]; alpha = 0 gives +infinity. Requires 0 <= alpha < pi.
double motional_dephasing_time(double wavelength_m, double angle_rad, double velocity_m_per_s);
/// 1 / broadening (the 100 kHz <-> 10 us pairing).
double zeeman_dephasing_time(double broadening_Hz);
double combined_dephasing(double tau2_s, double tau3_s);
/// exp[-(t/tau_D)^2 / (1 + (t/tau_T)^2)] / (1 + (t/tau_T)^2)^2
double efficiency_decay(double t_s, double tau_D_s, double tau_T_s);

double larmor_frequency(double b_field_T, double g_f);
double half_larmor_period(double b_field_T, double g_f = constants::cs_clock_g_factor);

/// Field along the fiber and populations of the stored coherences.
///
/// The coherence |F=4, m> <-> |F=3, m + dm> with g_F = +1/4 and -1/4 precesses at
/// (2m + dm) nu_L. Neighbouring m therefore differ by 2 nu_L and all terms rephase every half
/// Larmor period.
struct MagneticScenario {
  double b_field_T = 0.4e-4;
  double g_f = constants::cs_clock_g_factor;
  int delta_m = 0;
  std::vector<std::pair<int, double>> m_populations = flat_populations(3);

  void validate() const;
  static std::vector<std::pair<int, double>> flat_populations(int m_max);
};

/// |sum_m w_m exp(i 2 pi (2m + dm) nu_L t)|^2, the rephasing comb (no decay).
double interference_factor(double t_s, const MagneticScenario& scenario);

/// eta_rel(t) = interference_factor(t) * efficiency_decay(t). OpenMP-parallel over the grid.
std::vector<double> revival_envelope(const std::vector<double>& t_grid,
                                     const MagneticScenario& scenario,
                                     const DecoherenceParams& params);

namespace serial {
std::vector<double> revival_envelope(const std::vector<double>& t_grid,
                                     const MagneticScenario& scenario,
                                     const DecoherenceParams& params);
}

/// Local maxima of a sampled curve above `threshold` (t = 0 excluded), refined by a parabola
/// through the neighbouring samples.
std::vector<double> find_peaks(const std::vector<double>& t, const std::vector<double>& y,
                               double threshold);

struct Revivals {
  std::vector<double> rephasing_times_s;  // from the comb: weight independent
  std::vector<double> envelope_peaks_s;   // maxima of the decaying envelope near each rephasing
};

Revivals find_revivals(const std::vector<double>& t_grid, const MagneticScenario& scenario,
                       const DecoherenceParams& params);

}  // namespace nfmem::decoherence
