#pragma once

// Fundamental HE11 mode of a step-index cylinder (silica core, vacuum cladding).

#include <vector>

#include "nfmem/constants.hpp"

namespace nfmem::waveguide {

struct FiberSpec {
  double radius_m = 200e-9;
  double wavelength_m = 852e-9;
  double n_core = constants::silica_index_852;
  double n_clad = 1.0;

  /// Throws DomainError unless radius, wavelength > 0 and n_core > n_clad >= 1.
  void validate() const;
  double v_number() const;
};

/// Longitudinal-field amplitudes of the solved mode. Transverse fields follow from Maxwell's
/// equations; E_z ~ cos(phi), H_z ~ sin(phi), all amplitudes real with E_z core amplitude 1.
struct ModeAmplitudes {
  double ez_core = 1.0;
  double hz_core = 0.0;
  double ez_clad = 0.0;
  double hz_clad = 0.0;
};

class GuidedMode {
 public:
  GuidedMode() = default;

  double n_eff = 0.0;
  double beta_per_m = 0.0;
  double v_number = 0.0;
  double evanescent_fraction = 0.0;
  /// Transverse wavenumbers: u inside (J), q outside (K). Cladding intensity decays as exp(-2 q rho).
  double core_wavenumber_per_m = 0.0;
  double decay_constant_per_m = 0.0;
  /// Residual of the characteristic equation at n_eff (dimensionless).
  double residual = 0.0;
  /// V >= 2.405: higher modes exist, only HE11 is reported.
  bool multimode = false;

  /// Azimuthally averaged Poynting flux S_z(rho) normalized to unit guided power (1/m^2).
  /// Discontinuous at rho = radius (normal E component jumps across the dielectric boundary);
  /// rho >= radius evaluates the cladding side, so intensity(radius) is the value at r+.
  double intensity(double rho_m) const;
  double surface_intensity() const { return intensity(spec_.radius_m); }

  const FiberSpec& fiber() const { return spec_; }

 private:
  friend GuidedMode solve_he11(const FiberSpec& spec);

  // Unnormalized azimuthal average of S_z.
  double raw_flux(double rho_m) const;

  FiberSpec spec_{};
  ModeAmplitudes amp_{};
  double norm_ = 1.0;  // 1 / total raw power
};

/// Solves the HE11 characteristic equation. Throws SolverError when no root is found
/// (radius far below practical guidance, n_eff indistinguishable from n_clad).
GuidedMode solve_he11(const FiberSpec& spec);

/// Branch-resolved characteristic function for HE11 at a trial effective index.
/// Zero at the mode; monotone increasing in n_eff on the HE11 bracket.
double characteristic(const FiberSpec& spec, double n_eff);

/// Fraction of guided power carried outside the core, recomputed from the profile.
double evanescent_fraction(const GuidedMode& mode, const FiberSpec& spec);

double mode_intensity(const GuidedMode& mode, double rho_m);

struct ScanPoint {
  double diameter_m = 0.0;
  double surface_intensity_w_per_m2 = 0.0;
  double n_eff = 0.0;
  double evanescent_fraction = 0.0;
};

struct SurfaceScan {
  std::vector<ScanPoint> points;  // diameters that guide, in input order
  double argmax_diameter_m = 0.0;          // best grid point
  double refined_argmax_diameter_m = 0.0;  // parabolic refinement through the neighbours
};

/// Evanescent intensity just outside the surface for a fixed guided power, per diameter.
/// Diameters without a guided solution are skipped; throws DomainError if none guides.
/// OpenMP-parallel over diameters; output order matches input.
SurfaceScan surface_intensity_scan(double wavelength_m, const std::vector<double>& diameters_m,
                                   double power_w, double n_core = constants::silica_index_852,
                                   double n_clad = 1.0);

namespace serial {
SurfaceScan surface_intensity_scan(double wavelength_m, const std::vector<double>& diameters_m,
                                   double power_w, double n_core = constants::silica_index_852,
                                   double n_clad = 1.0);
}  // namespace serial

}  // namespace nfmem::waveguide
