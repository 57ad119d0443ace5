#pragma once

// Weak-probe Lambda-system response: susceptibility, transmission spectra, group delay and the
// control-power calibration.

#include <complex>
#include <vector>

#include "nfmem/constants.hpp"

namespace nfmem::eit {

using complex = std::complex<double>;

/// |g> = 6S1/2 F=4, |s> = 6S1/2 F=3, |e> = 6P3/2 F'=4.
///
/// Ground-state coherence decays at gamma_gs + kappa * Omega_c^2. The kappa term models
/// control-induced dephasing (off-resonant scattering on other excited levels); kappa = 0
/// recovers a power-independent gamma_gs.
struct LambdaScheme {
  double gamma_ge_rad_per_s = constants::cs_fitted_linewidth;
  double gamma_gs_rad_per_s = 0.0;
  double control_dephasing_s = 0.0;  // kappa
  double wavelength_m = constants::cs_d2_wavelength_m;
  double hyperfine_splitting_Hz = constants::cs_hyperfine_splitting_hz;

  void validate() const;
  double effective_gamma_gs(double rabi_rad_per_s) const;
  /// True when gamma_gs is not small against Gamma (more than 10%) at this control Rabi frequency.
  bool decoherence_dominant(double rabi_rad_per_s) const;
};

/// Normalized lineshape chi(delta) = i (Gamma/2)(g - i delta) / [(Gamma/2 - i delta)(g - i delta)
/// + Omega^2/4], with g the effective ground-state decay. Im chi(0) = 1 without control;
/// transmission is exp(-OD Im chi).
complex susceptibility(double delta_rad_per_s, const LambdaScheme& scheme,
                       double rabi_rad_per_s);

/// T(delta) = exp(-OD Im chi(delta)). OpenMP-parallel over the grid.
std::vector<double> eit_spectrum(double od, const LambdaScheme& scheme, double rabi_rad_per_s,
                                 const std::vector<double>& delta_grid);

namespace serial {
std::vector<double> eit_spectrum(double od, const LambdaScheme& scheme, double rabi_rad_per_s,
                                 const std::vector<double>& delta_grid);
}

struct GroupDelay {
  double delay_s = 0.0;
  double slowdown = 0.0;         // c * delay / L
  bool window_open = true;       // false when ground-state decay closes the window
};

/// delay = (OD/2) d Re chi / d delta at delta = 0, evaluated in closed form.
GroupDelay group_delay(double od, const LambdaScheme& scheme, double rabi_rad_per_s,
                       double medium_length_m);

struct ControlField {
  double power_W = 0.5e-3;
  double waist_m = 400e-6;
  double angle_rad = 13.0 * constants::pi / 180.0;
};

/// Omega_c = calibration * Gamma0 * sqrt(I / (2 I_sat)), I = 2P / (pi w^2).
double rabi_from_power(const ControlField& field, double calibration);

enum class DephasingModel { constant, control_induced };

/// Operating points the calibration must reproduce.
struct CalibrationAnchors {
  double transparency = 0.75;          // T(0) ...
  double transparency_power_W = 1.6e-3;  // ... at this control power
  double od = 3.0;
  double delay_s = 60e-9;              // group delay ...
  double delay_power_W = 0.5e-3;       // ... at this control power
  double waist_m = 400e-6;
};

struct Calibration {
  DephasingModel model = DephasingModel::control_induced;
  double rabi_factor = 0.0;
  double gamma_gs_rad_per_s = 0.0;
  double control_dephasing_s = 0.0;

  LambdaScheme apply(LambdaScheme scheme) const;
};

/// Solves both anchors simultaneously.
///   constant: gamma_gs and the Rabi factor are fitted, kappa = 0.
///   control_induced: gamma_gs = gamma_dark is held, the Rabi factor and kappa are fitted.
/// Throws SolverError when no solution exists.
Calibration calibrate(const CalibrationAnchors& anchors, double gamma_ge_rad_per_s,
                      DephasingModel model, double gamma_dark_rad_per_s = 0.0);

}  // namespace nfmem::eit
