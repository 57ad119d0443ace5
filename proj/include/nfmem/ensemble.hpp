#pragma once

// Cold-atom cloud around the nanofiber: density near the surface, atom-number estimates and the
// empirical absorption laws.

#include "nfmem/constants.hpp"
#include "nfmem/waveguide.hpp"

namespace nfmem::ensemble {

inline constexpr double kNanofiberWaistLength_m = 9e-3;

enum class DensityModel {
  uniform,       // n0 everywhere outside the fiber
  vdw_depleted,  // n0 * exp(-C3 / (k_B T (rho - r)^3)): atoms inside the capture shell are lost
};

struct CloudSpec {
  double peak_density_per_m3 = 1e17;  // 1e11 cm^-3
  double temperature_K = 200e-6;
  double overlap_length_m = 5e-3;
  double c3_jm3 = constants::cs_silica_c3_jm3;
  DensityModel model = DensityModel::uniform;

  void validate() const;
};

struct AbsorptionModel {
  double alpha0_L = 8.0 / 1.3;
  double p_sat_W = 1.3e-9;
  double k_exp = 1.0;
  double gamma_rad_per_s = constants::cs_fitted_linewidth;
  double od = 3.0;
};

/// Distance from the surface at which |U_vdW| = k_B T.
double capture_length(const CloudSpec& cloud);

/// Throws DomainError for rho < fiber radius.
double density_profile(const CloudSpec& cloud, const waveguide::FiberSpec& fiber, double rho_m);

/// Atoms in the annulus [r, r (1 + shell)] over the overlap length, by fixed-order quadrature.
double effective_atom_number(const CloudSpec& cloud, const waveguide::FiberSpec& fiber,
                             double shell_width_in_radii);

/// N = P_abs / p.
double atom_number_from_absorption(double p_abs_W,
                                   double p_single_W = constants::cs_saturated_scattered_power_w);

/// T = exp(-alpha0 L / (1 + P/P_sat)^k).
double saturation_transmission(double power_W, const AbsorptionModel& model);

/// T = exp(-OD / (1 + (2 delta / Gamma)^2)).
double lorentzian_transmission(double detuning_rad_per_s, const AbsorptionModel& model);

}  // namespace nfmem::ensemble
